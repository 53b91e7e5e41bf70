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

#ifndef LENS_VERSION_STORE_HPP_
#define LENS_VERSION_STORE_HPP_

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lens/table.hpp"

namespace lens {

struct VersionId {
  std::uint64_t value = 0;

  constexpr VersionId() = default;
  constexpr explicit VersionId(std::uint64_t v) : value(v) {}
  auto operator<=>(const VersionId&) const = default;
};

enum class CommitOperation { kUpload, kRepair, kReplay };

std::string_view CommitOperationName(CommitOperation op);
CommitOperation ParseCommitOperation(std::string_view name);

struct Commit {
  VersionId version;
  std::optional<VersionId> parent;
  std::string timestamp;
  CommitOperation operation = CommitOperation::kUpload;
  std::string content_hash;
  std::string note;
};

void to_json(nlohmann::json& j, const Commit& commit);
void from_json(const nlohmann::json& j, Commit& commit);

// Append-only per-dataset snapshot log:
//   <root>/<name>/dirty.csv           upload bytes, verbatim
//   <root>/<name>/versions/v<N>.csv   canonical CSV of version N
//   <root>/<name>/log.json            commit array
// Writers take an exclusive flock on <root>/<name>/.lock.
class VersionStore {
 public:
  explicit VersionStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  // raw_upload, when given, is persisted as dirty.csv; otherwise the
  // canonical CSV of the table is.
  VersionId Init(const std::string& dataset, const Table& table,
                 std::optional<std::string_view> raw_upload = std::nullopt,
                 const std::string& note = "upload");

  VersionId Commit(const std::string& dataset, const Table& table,
                   CommitOperation operation, const std::string& note);

  // Latest version when version is nullopt.
  Table Load(const std::string& dataset,
             std::optional<VersionId> version = std::nullopt) const;

  std::vector<lens::Commit> History(const std::string& dataset) const;

  bool Exists(const std::string& dataset) const;
  bool HasVersion(const std::string& dataset, VersionId version) const;
  VersionId Latest(const std::string& dataset) const;
  std::vector<std::string> ListDatasets() const;

  std::filesystem::path DatasetDir(const std::string& dataset) const;
  std::filesystem::path SnapshotPath(const std::string& dataset,
                                     VersionId version) const;
  std::string SnapshotBytes(const std::string& dataset,
                            VersionId version) const;
  std::string SnapshotHash(const std::string& dataset, VersionId version) const;

  // Versions whose snapshot bytes no longer match the logged hash.
  std::vector<VersionId> Verify(const std::string& dataset) const;

 private:
  void RequireStore(const std::string& dataset) const;
  void WriteLog(const std::string& dataset,
                const std::vector<lens::Commit>& log) const;

  std::filesystem::path root_;
};

bool IsValidDatasetName(std::string_view name);

}  // namespace lens

#endif  // LENS_VERSION_STORE_HPP_
