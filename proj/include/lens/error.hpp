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

#ifndef LENS_ERROR_HPP_
#define LENS_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace lens {

// Every failure path in the library maps to exactly one of these codes. The
// service translates them to HTTP statuses and the CLI to exit codes.
enum class ErrorCode {
  kInvalidArgument,
  kParse,
  kNotFound,
  kAlreadyExists,
  kFailedPrecondition,
  kUnknownTool,
  kTypeMismatch,
  kReplayDivergence,
  kIo,
};

std::string_view ErrorCodeName(ErrorCode code);

// reason, when set, is a finer machine-readable code such as
// "no_detections"; the service reports it instead of the generic name.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string reason = {})
      : std::runtime_error(message), code_(code), reason_(std::move(reason)) {}

  ErrorCode code() const { return code_; }
  const std::string& reason() const { return reason_; }

 private:
  ErrorCode code_;
  std::string reason_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message,
                              std::string reason = {}) {
  throw Error(code, message, std::move(reason));
}

}  // namespace lens

#endif  // LENS_ERROR_HPP_
