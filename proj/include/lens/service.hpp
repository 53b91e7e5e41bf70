/*
 * Copyright 2026 The Lens Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef LENS_SERVICE_HPP_
#define LENS_SERVICE_HPP_

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lens/error.hpp"
#include "lens/workspace.hpp"

namespace httplib {
class Server;
}

namespace lens {

// Transport-neutral request: the HTTP glue fills it from cpp-httplib, tests
// build it directly.
struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  std::string content_type;
  // multipart/form-data fields; file parts hold their content.
  std::map<std::string, std::string> form;
  std::map<std::string, std::string> filenames;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;

  nlohmann::json Json() const { return nlohmann::json::parse(body); }
};

// One entry of the stable error-code inventory.
struct ApiErrorCode {
  std::string code;
  int status;
};
const std::vector<ApiErrorCode>& ApiErrorCodes();

// HTTP status and machine code for a library error.
std::pair<int, std::string> MapError(const Error& error);

nlohmann::json OpenApiDocument();

class Service {
 public:
  explicit Service(Workspace& workspace) : workspace_(workspace) {}

  // Never throws; failures become {"error": {"code", "message"}} bodies.
  ApiResponse Handle(const ApiRequest& request);

  // Routes every method and path of the server into Handle.
  void Mount(httplib::Server& server);

 private:
  ApiResponse Dispatch(const ApiRequest& request);

  Workspace& workspace_;
};

}  // namespace lens

#endif  // LENS_SERVICE_HPP_
