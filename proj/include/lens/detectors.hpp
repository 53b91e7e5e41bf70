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

#ifndef LENS_DETECTORS_HPP_
#define LENS_DETECTORS_HPP_

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lens/learners.hpp"
#include "lens/parallel.hpp"
#include "lens/rules.hpp"
#include "lens/table.hpp"

namespace lens {

// Enum order is the canonical provenance order and, for the first seven
// kinds, the coordinate order of labeling vote vectors.
enum class DetectorKind {
  kSD,
  kIQR,
  kIsolationForest,
  kMissingValue,
  kDisguisedMissing,
  kRuleViolation,
  kUserTag,
  kMLDetector,
  kMinK,
};

inline constexpr std::size_t kNumBaseDetectors = 7;
inline constexpr DetectorKind kBaseDetectors[kNumBaseDetectors] = {
    DetectorKind::kSD,           DetectorKind::kIQR,
    DetectorKind::kIsolationForest, DetectorKind::kMissingValue,
    DetectorKind::kDisguisedMissing, DetectorKind::kRuleViolation,
    DetectorKind::kUserTag};

std::string_view DetectorName(DetectorKind kind);
// Accepts canonical names and short aliases (sd, iqr, if, mv, dm, rv, tag,
// ml, mink), case-insensitively. Throws kUnknownTool.
DetectorKind ParseDetectorKind(std::string_view name);

struct Detection {
  CellRef cell;
  DetectorKind detector = DetectorKind::kSD;
  std::string reason;
};

struct TagSet {
  std::set<std::string> tags;
};

// Deduplicated detections with per-cell provenance.
class DetectionReport {
 public:
  using CellMap = std::map<CellRef, std::vector<DetectorKind>>;
  using Histogram = std::map<std::string, std::map<DetectorKind, std::size_t>>;

  const CellMap& cells() const { return cells_; }
  std::size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }
  bool Contains(CellRef cell) const { return cells_.count(cell) != 0; }
  const std::map<DetectorKind, std::size_t>& per_detector_counts() const {
    return counts_;
  }
  // Column name -> detector -> number of cells.
  const Histogram& histogram() const { return histogram_; }

  // One Detection per (cell, contributing detector).
  std::vector<Detection> ToDetections() const;
  std::set<CellRef> CellSet() const;

  bool operator==(const DetectionReport&) const = default;

 private:
  friend DetectionReport Consolidate(const Table&,
                                     std::span<const std::vector<Detection>>);
  friend void from_json(const nlohmann::json&, DetectionReport&);
  CellMap cells_;
  std::map<DetectorKind, std::size_t> counts_;
  Histogram histogram_;
};

// Union of the reports with per-cell provenance sorted in enum order.
// Throws kInvalidArgument for a cell outside the table.
DetectionReport Consolidate(const Table& table,
                            std::span<const std::vector<Detection>> reports);

std::vector<Detection> DetectSd(const Table& table, std::size_t col,
                                double k = 3.0);
std::vector<Detection> DetectIqr(const Table& table, std::size_t col,
                                 double multiplier = 1.5);

struct IsolationForestDetectorConfig {
  double threshold = 0.6;
  IsolationForestConfig forest;
};

std::vector<Detection> DetectIsolationForest(
    const Table& table, const IsolationForestDetectorConfig& config,
    Exec exec = Exec::kParallel);

std::vector<Detection> DetectMissing(const Table& table,
                                     const MissingTokenSet& missing);

struct DisguisedMissingConfig {
  std::size_t min_count = 5;
  double min_row_fraction = 0.01;
  double gap_iqr_multiplier = 1.5;
  std::set<std::string> placeholders = {"unknown", "none", "n/a",
                                        "missing", "-",    "?"};
};

std::vector<Detection> DetectDisguised(const Table& table,
                                       const DisguisedMissingConfig& config = {});

// Enforced (Confirmed and Custom) rules only.
std::vector<Detection> DetectRuleViolations(const Table& table,
                                            const RuleSet& rules);

std::vector<Detection> DetectTagged(const Table& table, const TagSet& tags);

// Cells flagged by at least k distinct detectors, emitted as kMinK.
// Throws kInvalidArgument when k < 1.
std::vector<Detection> MinK(std::span<const std::vector<Detection>> reports,
                            std::size_t k);

struct DetectorSuiteConfig {
  std::vector<DetectorKind> tools;
  double sd_k = 3.0;
  double iqr_multiplier = 1.5;
  IsolationForestDetectorConfig isolation_forest;
  DisguisedMissingConfig disguised;
  TagSet tags;
  std::optional<std::size_t> min_k;
};

using DetectorOutputs = std::map<DetectorKind, std::vector<Detection>>;

// Runs the automated detectors in config.tools (kMLDetector and kMinK are
// skipped; they need a labeling session or other outputs). Detectors run
// concurrently under kParallel; outputs are keyed by kind so the result does
// not depend on completion order.
DetectorOutputs RunDetectors(const Table& table,
                             const DetectorSuiteConfig& config,
                             const RuleSet& rules, Exec exec = Exec::kParallel);

// Consolidates the outputs. With min_k set, only cells flagged by at least
// min_k distinct detectors survive and MinK joins their provenance.
DetectionReport BuildReport(const Table& table, const DetectorOutputs& outputs,
                            std::optional<std::size_t> min_k);

void to_json(nlohmann::json& j, const DetectionReport& report);
void from_json(const nlohmann::json& j, DetectionReport& report);
void to_json(nlohmann::json& j, const DetectorSuiteConfig& config);
void from_json(const nlohmann::json& j, DetectorSuiteConfig& config);

// Per-detector config object as recorded in DataSheets.
nlohmann::json DetectorConfigJson(const DetectorSuiteConfig& config,
                                  DetectorKind kind);

}  // namespace lens

#endif  // LENS_DETECTORS_HPP_
