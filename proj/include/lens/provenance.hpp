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

#ifndef LENS_PROVENANCE_HPP_
#define LENS_PROVENANCE_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lens/detectors.hpp"
#include "lens/labeling.hpp"
#include "lens/parallel.hpp"
#include "lens/profiler.hpp"
#include "lens/repair.hpp"
#include "lens/rules.hpp"
#include "lens/table.hpp"
#include "lens/version_store.hpp"

namespace lens {

// Everything needed to re-drive a labeling session: base detector settings,
// the rules it saw and the user's per-row answers.
struct LabelRecord {
  std::size_t budget = 1;
  LabelingConfig config;
  DetectorSuiteConfig base;
  RuleSet rules;
  std::vector<Submission> submissions;
};

struct DetectionContext {
  VersionId version;
  DetectorSuiteConfig config;
  RuleSet rules;
  std::optional<LabelRecord> labeling;
  DetectionReport report;
};

struct RepairContext {
  RepairKind kind = RepairKind::kStandard;
  MlRepairConfig ml;
  VersionId version_before;
  VersionId version_after;
};

// Base detector outputs a labeling session votes on.
DetectorOutputs LabelBaseOutputs(const Table& table, const LabelRecord& record,
                                 Exec exec = Exec::kParallel);

// Runs config.tools on the table. MLDetector needs a labeling record whose
// session is no longer active (kFailedPrecondition otherwise); the session is
// replayed from its submissions.
DetectionContext RunDetection(const Table& table, VersionId version,
                              const DetectorSuiteConfig& config, const RuleSet& rules,
                              const std::optional<LabelRecord>& labeling,
                              Exec exec = Exec::kParallel);

struct DataSheet {
  std::string dataset_name;
  std::string dirty_path;
  std::string repaired_path;
  std::size_t rows = 0;
  std::size_t cols = 0;
  VersionId version_before;
  VersionId version_after;
  DetectorSuiteConfig detection;
  std::size_t num_detected_cells = 0;
  std::optional<RepairKind> repair;
  MlRepairConfig ml_repair;
  std::vector<FDRule> rules;
  std::optional<LabelRecord> labeling;
  QualityMetrics quality_before;
  std::optional<QualityMetrics> quality_after;
  std::string created_at;
};

// Paths in the sheet are relative to the store root. Throws
// kFailedPrecondition when the repair context does not follow the detection.
DataSheet GenerateDatasheet(const VersionStore& store, const std::string& dataset,
                            const DetectionContext& detection,
                            const std::optional<RepairContext>& repair,
                            Exec exec = Exec::kParallel);

// Pretty-printed, sorted keys.
std::string DatasheetJson(const DataSheet& sheet);
// Throws kParse for malformed JSON and kUnknownTool for unknown tool names.
DataSheet ParseDatasheet(std::string_view text);

// Writes <dataset dir>/datasheets/<created_at>.json, adding a counter when
// the name is taken. Returns the path.
std::filesystem::path SaveDatasheet(const VersionStore& store, const DataSheet& sheet);

struct ReplayResult {
  Table table;
  VersionId version;
  bool committed = false;
  std::string content_hash;
};

// Re-executes the recorded pipeline from version_before. With a repair, the
// result must hash to version_after's snapshot (kReplayDivergence otherwise,
// nothing committed) and is committed as a replay. Detection-only sheets
// check the detected-cell count and commit nothing.
ReplayResult ReplayDatasheet(VersionStore& store, const DataSheet& sheet,
                             Exec exec = Exec::kParallel);

void to_json(nlohmann::json& j, const DataSheet& sheet);
void from_json(const nlohmann::json& j, DataSheet& sheet);
void to_json(nlohmann::json& j, const LabelRecord& record);
void from_json(const nlohmann::json& j, LabelRecord& record);
void to_json(nlohmann::json& j, const DetectionContext& context);
void from_json(const nlohmann::json& j, DetectionContext& context);
void to_json(nlohmann::json& j, const RepairContext& context);
void from_json(const nlohmann::json& j, RepairContext& context);

enum class Experiment { kDetection, kRepair };
std::string_view ExperimentName(Experiment experiment);
// "Detection"/"Repair", case-insensitive. Throws kInvalidArgument.
Experiment ParseExperiment(std::string_view name);

struct RunRecord {
  Experiment experiment = Experiment::kDetection;
  std::string run_id;
  std::map<std::string, std::string> params;
  std::map<std::string, double> metrics;
  std::vector<std::string> artifact_paths;
  std::string timestamp;
};

void to_json(nlohmann::json& j, const RunRecord& record);
void from_json(const nlohmann::json& j, RunRecord& record);

// Append-only local tracker:
//   <root>/<Detection|Repair>/<run_id>/{params.json,metrics.json,run.json,artifacts/}
// Run ids are a tracker-wide sequence, allocated under <root>/.lock.
class RunTracker {
 public:
  explicit RunTracker(std::filesystem::path root);
  const std::filesystem::path& root() const { return root_; }

  // artifacts maps file names to contents, written under artifacts/.
  RunRecord LogRun(Experiment experiment, const std::map<std::string, std::string>& params,
                   const std::map<std::string, double>& metrics,
                   const std::map<std::string, std::string>& artifacts = {});

  // Ascending by timestamp, then run id.
  std::vector<RunRecord> ListRuns(Experiment experiment) const;

 private:
  std::filesystem::path root_;
};

}  // namespace lens

#endif  // LENS_PROVENANCE_HPP_
