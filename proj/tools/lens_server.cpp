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

#include <cstdlib>
#include <iostream>
#include <string>

#include "httplib.h"
#include "lens/error.hpp"
#include "lens/service.hpp"
#include "lens/workspace.hpp"

int main() {
  try {
    lens::Workspace workspace(lens::WorkspaceOptions::FromEnvironment());
    int port = 8080;
    if (const char* env = std::getenv("LENS_PORT"); env != nullptr && *env != '\0') {
      port = std::stoi(env);
    }
    const char* host_env = std::getenv("LENS_HOST");
    const std::string host = host_env != nullptr && *host_env != '\0' ? host_env : "0.0.0.0";

    lens::Service service(workspace);
    httplib::Server server;
    service.Mount(server);
    std::cerr << "lens service on " << host << ":" << port << ", data in "
              << workspace.options().data_dir.string() << "\n";
    if (!server.listen(host, port)) {
      std::cerr << "cannot listen on " << host << ":" << port << "\n";
      return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
