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

#ifndef LENS_REPAIR_HPP_
#define LENS_REPAIR_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lens/detectors.hpp"
#include "lens/learners.hpp"
#include "lens/table.hpp"
#include "lens/version_store.hpp"

namespace lens {

enum class RepairKind { kStandard, kMl };

std::string_view RepairKindName(RepairKind kind);
// "standard"/"StandardImputer" or "ml"/"MLImputer". Throws kUnknownTool.
RepairKind ParseRepairKind(std::string_view name);

inline constexpr std::string_view kDummyValue = "Dummy";

struct MlRepairConfig {
  std::size_t knn_k = 5;
  TreeParams tree;
  std::uint64_t seed = 0;
};

struct CellChange {
  CellRef cell;
  std::string old_value;
  std::string new_value;
  std::string method;
};

struct RepairResult {
  Table repaired;
  std::vector<CellChange> changes;
  std::optional<VersionId> version_after;
};

// Detected Numeric cells take the mean of the column's clean (not detected,
// not missing) values, or "0.0" when there are none; detected Categorical
// cells become "Dummy". Throws kInvalidArgument for out-of-bounds detections.
RepairResult RepairStandard(const Table& table, const DetectionReport& detections);

// Decision-tree regression for Numeric columns, k-NN for Categorical ones.
// Features are the other columns of the table after standard imputation of
// every detected cell; columns are processed in schema order and always read
// those pre-filled features, never earlier predictions.
RepairResult RepairMl(const Table& table, const DetectionReport& detections,
                      const MlRepairConfig& config = {}, Exec exec = Exec::kParallel);

RepairResult Repair(const Table& table, const DetectionReport& detections, RepairKind kind,
                    const MlRepairConfig& config = {}, Exec exec = Exec::kParallel);

// Writes <dataset dir>/repaired.csv and commits a repair version.
VersionId ApplyAndCommit(VersionStore& store, const std::string& dataset,
                         RepairResult& result, const std::string& note = "repair");

void to_json(nlohmann::json& j, const MlRepairConfig& config);
void from_json(const nlohmann::json& j, MlRepairConfig& config);
void to_json(nlohmann::json& j, const CellChange& change);

}  // namespace lens

#endif  // LENS_REPAIR_HPP_
