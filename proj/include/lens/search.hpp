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

#ifndef LENS_SEARCH_HPP_
#define LENS_SEARCH_HPP_

#include <array>
#include <bitset>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lens/detectors.hpp"
#include "lens/parallel.hpp"
#include "lens/repair.hpp"
#include "lens/rng.hpp"
#include "lens/rules.hpp"
#include "lens/table.hpp"

namespace lens {

// Detectors that the automated search may switch on, in switch order.
inline constexpr std::size_t kNumSwitches = 6;
inline constexpr std::array<DetectorKind, kNumSwitches> kSwitchDetectors = {
    DetectorKind::kSD,           DetectorKind::kIQR,
    DetectorKind::kIsolationForest, DetectorKind::kMissingValue,
    DetectorKind::kDisguisedMissing, DetectorKind::kRuleViolation};
inline constexpr std::size_t kSearchSpaceSize = (1u << kNumSwitches) * 2;

// One point of the 128-point search space. Its ordinal reads the switches as
// a bit string (SD most significant) followed by the repair bit (ML = 1), so
// ordinal order is the lexicographic tie-break order.
struct CleaningConfig {
  std::array<bool, kNumSwitches> switches{};
  RepairKind repair = RepairKind::kStandard;

  std::size_t Ordinal() const;
  static CleaningConfig FromOrdinal(std::size_t ordinal);
  bool AllOff() const;
  std::vector<DetectorKind> EnabledDetectors() const;

  auto operator<=>(const CleaningConfig& other) const { return Ordinal() <=> other.Ordinal(); }
  bool operator==(const CleaningConfig& other) const { return Ordinal() == other.Ordinal(); }
};

enum class MetricKind { kMse, kF1Macro };

struct Score {
  MetricKind metric = MetricKind::kMse;
  double value = 0.0;

  // Strictly better in the metric's direction.
  bool BetterThan(const Score& other) const {
    return metric == MetricKind::kMse ? value < other.value : value > other.value;
  }
  bool operator==(const Score&) const = default;
};

struct TaskSpec {
  std::string target;
  TreeTask task = TreeTask::kRegression;
  TreeParams model;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
};

// Detector and repair settings shared by every trial (module defaults plus
// anything the caller pins, e.g. tags or isolation-forest seed).
struct PipelineDefaults {
  DetectorSuiteConfig detectors;
  MlRepairConfig ml_repair;
};

struct Trial {
  std::size_t index = 0;
  CleaningConfig config;
  Score score;
  double wall_seconds = 0.0;
};

struct OptimizerConfig {
  std::size_t n_trials = 20;
  std::size_t n_startup = 10;
  double gamma = 0.25;
  std::size_t n_candidates = 24;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  std::optional<double> stop_threshold;
};

struct SearchResult {
  Trial best;
  std::vector<Trial> history;
};

// Throws kNotFound for an unknown target and kTypeMismatch when the task does
// not match the target column type.
void ValidateTask(const Table& table, const TaskSpec& task);

// Detect -> consolidate -> repair -> seeded split -> tree fit -> test metric.
Score ScoreConfig(const Table& table, const RuleSet& rules, const CleaningConfig& config,
                  const TaskSpec& task, const PipelineDefaults& defaults = {},
                  Exec exec = Exec::kSerial);

// Downstream metric of a tree trained on the table as it is.
Score ScoreTable(const Table& table, const TaskSpec& task);

// Scores all 128 configurations (in parallel under kParallel). history is in
// ordinal order; ties resolve to the smallest ordinal.
SearchResult ExhaustiveSearch(const Table& table, const RuleSet& rules, const TaskSpec& task,
                              const PipelineDefaults& defaults = {},
                              Exec exec = Exec::kParallel);

// Random startup followed by a categorical TPE. Throws kInvalidArgument for
// n_trials < 1 or an invalid optimizer config.
SearchResult RunSearch(const Table& table, const RuleSet& rules, const TaskSpec& task,
                       const OptimizerConfig& optimizer,
                       const PipelineDefaults& defaults = {});

// TPE proposal step, separated for testing: the next configuration given the
// trials so far and the set of visited ordinals.
std::size_t ProposeNext(const std::vector<Trial>& history,
                        const std::vector<char>& visited, const OptimizerConfig& optimizer,
                        Rng& rng);

struct CurvePoint {
  std::size_t iteration = 0;
  double score = 0.0;
  double best_so_far = 0.0;
};

struct IterationCurve {
  MetricKind metric = MetricKind::kMse;
  std::vector<CurvePoint> points;
  double dirty_baseline = 0.0;
  std::optional<double> clean_baseline;

  std::string ToCsv() const;
};

IterationCurve MakeIterationCurve(const std::vector<Trial>& history, double dirty_baseline,
                                  std::optional<double> clean_baseline = std::nullopt);

std::string_view MetricName(MetricKind metric);

void to_json(nlohmann::json& j, const CleaningConfig& config);
void from_json(const nlohmann::json& j, CleaningConfig& config);
void to_json(nlohmann::json& j, const Trial& trial);
void to_json(nlohmann::json& j, const IterationCurve& curve);
void to_json(nlohmann::json& j, const OptimizerConfig& config);
void from_json(const nlohmann::json& j, OptimizerConfig& config);
void to_json(nlohmann::json& j, const TaskSpec& task);
void from_json(const nlohmann::json& j, TaskSpec& task);

// Search history JSON: [{index, config, score, best_so_far}].
nlohmann::json HistoryJson(const std::vector<Trial>& history);

}  // namespace lens

#endif  // LENS_SEARCH_HPP_
