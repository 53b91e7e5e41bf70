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

#ifndef LENS_WORKSPACE_HPP_
#define LENS_WORKSPACE_HPP_

#include <cstdint>
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
#include "lens/provenance.hpp"
#include "lens/repair.hpp"
#include "lens/rules.hpp"
#include "lens/search.hpp"
#include "lens/table.hpp"
#include "lens/version_store.hpp"

namespace lens {

struct WorkspaceOptions {
  std::filesystem::path data_dir = "datasets";
  std::filesystem::path runs_dir = "runs";
  std::uint64_t seed = 0;
  Exec exec = Exec::kParallel;

  // LENS_DATA_DIR, LENS_RUNS_DIR and LENS_SEED, falling back to the defaults.
  static WorkspaceOptions FromEnvironment();
};

// Dataset-level pipeline state on top of the version store and the run
// tracker. Besides the store's own files each dataset directory holds:
//   state.json       working version, counters
//   rules.json       rule set with statuses
//   tags.json        user-tagged dirty values
//   detection.json   last detection context
//   repair.json      last repair context
//   sessions/<id>.json  labeling sessions (recorded submissions)
// Mutating calls hold an flock on <dataset>/.state.lock.
class Workspace {
 public:
  explicit Workspace(WorkspaceOptions options);

  const WorkspaceOptions& options() const { return options_; }
  VersionStore& store() { return store_; }
  const VersionStore& store() const { return store_; }
  RunTracker& tracker() { return tracker_; }

  struct UploadResult {
    std::string dataset;
    VersionId version;
    bool created = false;
    bool committed = false;
  };

  // First upload creates the store. Later uploads switch the working version
  // when the requested version exists and commit the content as a new
  // version otherwise. With must_create, an existing dataset is an error
  // (kAlreadyExists, reason dataset_exists). csv may be empty only when
  // switching to an existing version.
  UploadResult Upload(const std::string& dataset, std::string_view csv,
                      std::optional<std::uint64_t> version = std::nullopt,
                      bool must_create = false);
  UploadResult UploadDemo(const std::string& demo, const std::string& dataset,
                          std::optional<std::uint64_t> seed = std::nullopt);

  std::vector<std::string> Datasets() const;
  std::vector<Commit> Versions(const std::string& dataset) const;
  VersionId WorkingVersion(const std::string& dataset) const;
  Table LoadWorking(const std::string& dataset) const;

  ProfileReport Profile(const std::string& dataset) const;
  // Uses the last detection when it was run on the working version.
  QualityMetrics Quality(const std::string& dataset) const;

  // Rules re-measured against the working version.
  RuleSet Rules(const std::string& dataset) const;
  RuleSet SetRuleStatus(const std::string& dataset, const std::string& key,
                        const std::string& status);
  RuleSet AddRule(const std::string& dataset, std::vector<std::string> determinants,
                  std::vector<std::string> dependents);

  TagSet Tags(const std::string& dataset) const;
  TagSet AddTags(const std::string& dataset, const std::vector<std::string>& tags);

  struct DetectOutcome {
    DetectionContext context;
    // MLDetector was requested but no completed labeling session exists for
    // the working version; the report holds the other tools only and is
    // recomputed when a session completes.
    bool ml_pending = false;
    std::string run_id;
  };
  // Tags in config are merged with the dataset's stored tags.
  DetectOutcome Detect(const std::string& dataset, DetectorSuiteConfig config);
  std::optional<DetectionContext> LastDetection(const std::string& dataset) const;

  struct SessionView {
    std::string session_id;
    LabelStatus status = LabelStatus::kActive;
    std::optional<std::size_t> row;
    std::vector<std::pair<std::string, std::string>> values;
    std::size_t budget = 0;
    std::size_t remaining_budget = 0;
    std::size_t reviewed_count = 0;
    std::size_t max_reviews = 0;
  };
  // base supplies detector settings for the votes; its tools are ignored.
  SessionView StartLabelSession(const std::string& dataset, std::size_t budget,
                                DetectorSuiteConfig base = {},
                                std::optional<std::uint64_t> seed = std::nullopt);
  SessionView NextTuple(const std::string& dataset, const std::string& session_id);
  // Throws kFailedPrecondition (session_closed) once the session is over.
  SessionView Submit(const std::string& dataset, const std::string& session_id,
                     std::size_t row, const std::vector<std::string>& dirty_cols);

  struct RepairOutcome {
    RepairResult result;
    RepairContext context;
    std::string run_id;
  };
  // Repairs the table the last detection ran on. kFailedPrecondition
  // (no_detections) without one.
  RepairOutcome RepairDataset(const std::string& dataset, RepairKind kind,
                              std::optional<MlRepairConfig> ml = std::nullopt);

  struct AutocleanOutcome {
    SearchResult search;
    IterationCurve curve;
    TaskSpec task;
    OptimizerConfig optimizer;
    VersionId version_before;
    VersionId version_after;
    bool committed = false;
    std::size_t num_detected_cells = 0;
  };
  // Searches, then applies the best configuration through Detect and
  // RepairDataset. An all-off winner commits nothing.
  AutocleanOutcome Autoclean(const std::string& dataset, TaskSpec task,
                             OptimizerConfig optimizer);

  struct SheetOutcome {
    DataSheet sheet;
    std::filesystem::path path;
  };
  SheetOutcome CreateDatasheet(const std::string& dataset);
  ReplayResult Replay(const DataSheet& sheet);

 private:
  std::filesystem::path Dir(const std::string& dataset) const;
  nlohmann::json ReadState(const std::string& dataset, const std::string& file) const;
  void WriteState(const std::string& dataset, const std::string& file,
                  const nlohmann::json& value) const;
  void RequireDataset(const std::string& dataset) const;
  void SetWorkingVersion(const std::string& dataset, VersionId version);
  std::uint64_t NextCounter(const std::string& dataset, const std::string& name);

  RuleSet StoredRules(const std::string& dataset) const;
  DetectOutcome DetectLocked(const std::string& dataset, const DetectorSuiteConfig& config);
  RepairOutcome RepairLocked(const std::string& dataset, RepairKind kind,
                             const MlRepairConfig& ml);
  std::optional<LabelRecord> CompletedSession(const std::string& dataset,
                                              VersionId version) const;
  SessionView View(const std::string& session_id, const Table& table,
                   const LabelSession& session) const;

  WorkspaceOptions options_;
  VersionStore store_;
  RunTracker tracker_;
};

void to_json(nlohmann::json& j, const Workspace::SessionView& view);

}  // namespace lens

#endif  // LENS_WORKSPACE_HPP_
