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

#ifndef LENS_IO_HPP_
#define LENS_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace lens {

// Lower-case hex SHA-256 digest.
std::string Sha256Hex(std::string_view bytes);

// Seconds since the epoch. Honors SOURCE_DATE_EPOCH so that runs can be made
// byte-reproducible.
std::int64_t NowEpochSeconds();

// ISO-8601 UTC, second resolution: 2026-10-16T07:53:00Z.
std::string FormatUtc(std::int64_t epoch_seconds);
std::string UtcNow();

std::string ReadFile(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it over the target.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view bytes);

// Exclusive advisory lock (flock) held for the object's lifetime.
class FileLock {
 public:
  explicit FileLock(const std::filesystem::path& lock_path);
  ~FileLock();
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace lens

#endif  // LENS_IO_HPP_
