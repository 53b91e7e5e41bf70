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

#include <omp.h>

#include "lens/error.hpp"
#include "lens/parallel.hpp"

namespace lens {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kAlreadyExists: return "already_exists";
    case ErrorCode::kFailedPrecondition: return "failed_precondition";
    case ErrorCode::kUnknownTool: return "unknown_tool";
    case ErrorCode::kTypeMismatch: return "type_mismatch";
    case ErrorCode::kReplayDivergence: return "replay_divergence";
    case ErrorCode::kIo: return "io_error";
  }
  return "unknown";
}

std::string_view ExecName(Exec exec) {
  return exec == Exec::kSerial ? "serial" : "openmp";
}

int MaxThreads() { return omp_get_max_threads(); }

}  // namespace lens
