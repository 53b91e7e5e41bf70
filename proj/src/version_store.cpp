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

#include "lens/version_store.hpp"

#include <algorithm>

#include "lens/error.hpp"
#include "lens/io.hpp"

namespace lens {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view CommitOperationName(CommitOperation op) {
  switch (op) {
    case CommitOperation::kUpload: return "upload";
    case CommitOperation::kRepair: return "repair";
    case CommitOperation::kReplay: return "replay";
  }
  return "upload";
}

CommitOperation ParseCommitOperation(std::string_view name) {
  if (name == "upload") return CommitOperation::kUpload;
  if (name == "repair") return CommitOperation::kRepair;
  if (name == "replay") return CommitOperation::kReplay;
  Fail(ErrorCode::kParse, "unknown commit operation '" + std::string(name) + "'");
}

void to_json(json& j, const Commit& commit) {
  j = json{{"version", commit.version.value},
           {"parent", commit.parent ? json(commit.parent->value) : json(nullptr)},
           {"timestamp", commit.timestamp},
           {"operation", CommitOperationName(commit.operation)},
           {"content_hash", commit.content_hash},
           {"note", commit.note}};
}

void from_json(const json& j, Commit& commit) {
  commit.version = VersionId(j.at("version").get<std::uint64_t>());
  commit.parent = j.at("parent").is_null()
                      ? std::nullopt
                      : std::optional(VersionId(j.at("parent").get<std::uint64_t>()));
  commit.timestamp = j.at("timestamp").get<std::string>();
  commit.operation = ParseCommitOperation(j.at("operation").get<std::string>());
  commit.content_hash = j.at("content_hash").get<std::string>();
  commit.note = j.at("note").get<std::string>();
}

bool IsValidDatasetName(std::string_view name) {
  if (name.empty() || name.size() > 128 || name.front() == '.') return false;
  return std::all_of(name.begin(), name.end(), [](char ch) {
    return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
           (ch >= '0' && ch <= '9') || ch == '_' || ch == '-' || ch == '.';
  });
}

VersionStore::VersionStore(fs::path root) : root_(std::move(root)) {}

fs::path VersionStore::DatasetDir(const std::string& dataset) const {
  return root_ / dataset;
}

fs::path VersionStore::SnapshotPath(const std::string& dataset,
                                    VersionId version) const {
  return DatasetDir(dataset) / "versions" /
         ("v" + std::to_string(version.value) + ".csv");
}

bool VersionStore::Exists(const std::string& dataset) const {
  return IsValidDatasetName(dataset) &&
         fs::exists(DatasetDir(dataset) / "log.json");
}

void VersionStore::RequireStore(const std::string& dataset) const {
  if (!Exists(dataset)) {
    Fail(ErrorCode::kNotFound, "no store for dataset '" + dataset + "'");
  }
}

void VersionStore::WriteLog(const std::string& dataset,
                            const std::vector<lens::Commit>& log) const {
  json entries = json::array();
  for (const auto& commit : log) entries.push_back(commit);
  WriteFileAtomic(DatasetDir(dataset) / "log.json", entries.dump(2) + "\n");
}

VersionId VersionStore::Init(const std::string& dataset, const Table& table,
                             std::optional<std::string_view> raw_upload,
                             const std::string& note) {
  if (!IsValidDatasetName(dataset)) {
    Fail(ErrorCode::kInvalidArgument, "invalid dataset name '" + dataset + "'");
  }
  FileLock lock(DatasetDir(dataset) / ".lock");
  if (Exists(dataset)) {
    Fail(ErrorCode::kAlreadyExists, "store for '" + dataset + "' already exists");
  }
  const std::string canonical = ToCsv(table);
  WriteFileAtomic(DatasetDir(dataset) / "dirty.csv",
                  raw_upload ? *raw_upload : std::string_view(canonical));
  WriteFileAtomic(SnapshotPath(dataset, VersionId(0)), canonical);
  lens::Commit commit;
  commit.version = VersionId(0);
  commit.timestamp = UtcNow();
  commit.operation = CommitOperation::kUpload;
  commit.content_hash = Sha256Hex(canonical);
  commit.note = note;
  WriteLog(dataset, {commit});
  return commit.version;
}

VersionId VersionStore::Commit(const std::string& dataset, const Table& table,
                               CommitOperation operation,
                               const std::string& note) {
  RequireStore(dataset);
  FileLock lock(DatasetDir(dataset) / ".lock");
  auto log = History(dataset);
  const VersionId next(log.size());
  const std::string canonical = ToCsv(table);
  const fs::path path = SnapshotPath(dataset, next);
  if (fs::exists(path)) {
    Fail(ErrorCode::kIo, "snapshot " + path.string() + " already present");
  }
  WriteFileAtomic(path, canonical);
  lens::Commit commit;
  commit.version = next;
  commit.parent = log.back().version;
  commit.timestamp = UtcNow();
  commit.operation = operation;
  commit.content_hash = Sha256Hex(canonical);
  commit.note = note;
  log.push_back(commit);
  WriteLog(dataset, log);
  return next;
}

std::vector<lens::Commit> VersionStore::History(const std::string& dataset) const {
  RequireStore(dataset);
  const json entries = json::parse(ReadFile(DatasetDir(dataset) / "log.json"));
  std::vector<lens::Commit> log;
  for (const auto& entry : entries) log.push_back(entry.get<lens::Commit>());
  return log;
}

VersionId VersionStore::Latest(const std::string& dataset) const {
  return History(dataset).back().version;
}

bool VersionStore::HasVersion(const std::string& dataset,
                              VersionId version) const {
  return Exists(dataset) && version.value < History(dataset).size();
}

std::string VersionStore::SnapshotBytes(const std::string& dataset,
                                        VersionId version) const {
  if (!HasVersion(dataset, version)) {
    Fail(ErrorCode::kNotFound, "dataset '" + dataset + "' has no version " +
                                   std::to_string(version.value));
  }
  return ReadFile(SnapshotPath(dataset, version));
}

std::string VersionStore::SnapshotHash(const std::string& dataset,
                                       VersionId version) const {
  const auto log = History(dataset);
  if (version.value >= log.size()) {
    Fail(ErrorCode::kNotFound, "dataset '" + dataset + "' has no version " +
                                   std::to_string(version.value));
  }
  return log[version.value].content_hash;
}

Table VersionStore::Load(const std::string& dataset,
                         std::optional<VersionId> version) const {
  const auto log = History(dataset);
  const VersionId target = version.value_or(log.back().version);
  if (target.value >= log.size()) {
    Fail(ErrorCode::kNotFound, "dataset '" + dataset + "' has no version " +
                                   std::to_string(target.value));
  }
  const std::string bytes = ReadFile(SnapshotPath(dataset, target));
  if (Sha256Hex(bytes) != log[target.value].content_hash) {
    Fail(ErrorCode::kIo, "snapshot v" + std::to_string(target.value) +
                             " of '" + dataset + "' does not match its hash");
  }
  return ParseCsv(bytes, dataset);
}

std::vector<std::string> VersionStore::ListDatasets() const {
  std::vector<std::string> names;
  std::error_code ec;
  if (!fs::is_directory(root_, ec)) return names;
  for (const auto& entry : fs::directory_iterator(root_)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && Exists(name)) names.push_back(name);
  }
  std::sort(names.begin(), names.end());
  return names;
}

std::vector<VersionId> VersionStore::Verify(const std::string& dataset) const {
  std::vector<VersionId> broken;
  for (const auto& commit : History(dataset)) {
    std::string bytes;
    try {
      bytes = ReadFile(SnapshotPath(dataset, commit.version));
    } catch (const Error&) {
      broken.push_back(commit.version);
      continue;
    }
    if (Sha256Hex(bytes) != commit.content_hash) broken.push_back(commit.version);
  }
  return broken;
}

}  // namespace lens
