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

#ifndef LENS_PARALLEL_HPP_
#define LENS_PARALLEL_HPP_

#include <cstddef>
#include <exception>
#include <mutex>
#include <string_view>

namespace lens {

// Kernels that have a data-parallel inner loop take an Exec argument. kSerial
// runs the plain reference loop; kParallel runs the OpenMP loop. Both produce
// bit-identical results: every parallel loop writes to a per-index slot and
// any reduction happens afterwards in index order.
enum class Exec { kSerial, kParallel };

std::string_view ExecName(Exec exec);

int MaxThreads();

// Captures the first exception thrown inside an OpenMP region so it can be
// rethrown on the calling thread (exceptions must not escape the region).
class ExceptionSlot {
 public:
  template <typename Fn>
  void Run(Fn&& fn) {
    try {
      fn();
    } catch (...) {
      std::lock_guard<std::mutex> lock(mutex_);
      if (!error_) error_ = std::current_exception();
    }
  }

  void Rethrow() {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::mutex mutex_;
  std::exception_ptr error_;
};

// Runs body(i) for i in [0, n).
template <typename Body>
void ForEachIndex(Exec exec, std::size_t n, Body&& body) {
  if (exec == Exec::kSerial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  ExceptionSlot slot;
  const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    slot.Run([&] { body(static_cast<std::size_t>(i)); });
  }
  slot.Rethrow();
}

}  // namespace lens

#endif  // LENS_PARALLEL_HPP_
