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

#ifndef LENS_LABELING_HPP_
#define LENS_LABELING_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lens/detectors.hpp"
#include "lens/learners.hpp"
#include "lens/table.hpp"

namespace lens {

// One coordinate per base detector, in kBaseDetectors order.
using VoteVector = std::array<std::uint8_t, kNumBaseDetectors>;

enum class LabelStatus { kActive, kExhausted, kComplete };
std::string_view LabelStatusName(LabelStatus status);

enum class CellLabel { kUnlabeled, kDirty, kClean };
enum class LabelSource { kNone, kDirect, kPropagated };

// One reviewed tuple. An empty dirty_cols list is a skip.
struct Submission {
  std::size_t row = 0;
  std::vector<std::string> dirty_cols;

  bool skipped() const { return dirty_cols.empty(); }
  bool operator==(const Submission&) const = default;
};

void to_json(nlohmann::json& j, const Submission& submission);
void from_json(const nlohmann::json& j, Submission& submission);

struct LabelingConfig {
  // The per-column classifier sees few labels, so leaves may hold one sample.
  TreeParams tree{8, 1};
  std::uint64_t seed = 0;
};

struct PropagatedLabels {
  std::size_t num_rows = 0;
  std::size_t num_cols = 0;
  std::vector<CellLabel> labels;
  std::vector<LabelSource> sources;

  CellLabel label(std::size_t row, std::size_t col) const {
    return labels[row * num_cols + col];
  }
  LabelSource source(std::size_t row, std::size_t col) const {
    return sources[row * num_cols + col];
  }
};

// Budgeted tuple selection over per-column clusterings of detector votes.
// Submissions that mark at least one dirty cell consume budget; skips are
// free but the session ends after max_reviews = 5 * budget reviews.
class LabelSession {
 public:
  // Throws kInvalidArgument when budget < 1.
  static LabelSession Start(const Table& table, const DetectorOutputs& base,
                            std::size_t budget, LabelingConfig config = {});

  // Re-drives a session from recorded submissions; throws kReplayDivergence
  // if the selection sequence differs from the recording, or, with
  // require_complete, if the session is still active afterwards.
  static LabelSession Replay(const Table& table, const DetectorOutputs& base,
                             std::size_t budget, LabelingConfig config,
                             const std::vector<Submission>& submissions,
                             bool require_complete = true);

  // Next row to review, or nullopt once the session is exhausted. Calling it
  // again before submitting returns the same row. Throws kFailedPrecondition
  // unless Active.
  std::optional<std::size_t> NextTuple();

  // dirty_cols empty means skip. Throws kFailedPrecondition unless Active,
  // kInvalidArgument for a row other than the current one or an unknown
  // column.
  void Submit(std::size_t row, const std::vector<std::string>& dirty_cols);

  // Throws kFailedPrecondition while Active.
  PropagatedLabels Propagate() const;

  // Per-column classifier over vote vectors; predicted-dirty cells become
  // kMLDetector detections.
  std::vector<Detection> TrainPredict(const PropagatedLabels& labels) const;

  std::size_t budget() const { return budget_; }
  std::size_t round() const { return submissions_.size(); }
  std::size_t remaining_budget() const { return remaining_; }
  std::size_t max_reviews() const { return 5 * budget_; }
  std::size_t reviewed_count() const { return submissions_.size(); }
  LabelStatus status() const { return status_; }
  std::optional<std::size_t> current_row() const { return current_; }
  const std::vector<std::size_t>& shown() const { return shown_; }
  const std::vector<Submission>& submissions() const { return submissions_; }
  const LabelingConfig& config() const { return config_; }
  std::size_t num_rows() const { return num_rows_; }
  std::size_t num_cols() const { return column_names_.size(); }

  const VoteVector& votes(std::size_t row, std::size_t col) const {
    return votes_[row * column_names_.size() + col];
  }
  CellLabel direct_label(std::size_t row, std::size_t col) const {
    return direct_[row * column_names_.size() + col];
  }

  // Cluster id of every cell of a column under the current cluster count.
  std::vector<std::size_t> ColumnClusters(std::size_t col) const;

 private:
  std::size_t ClusterCount(std::size_t col) const;

  std::size_t num_rows_ = 0;
  std::vector<std::string> column_names_;
  std::vector<VoteVector> votes_;
  // Per column: distinct vote vectors (sorted) and each cell's index into it.
  std::vector<std::vector<VoteVector>> distinct_;
  std::vector<std::vector<std::size_t>> distinct_weight_;
  std::vector<std::vector<std::size_t>> cell_distinct_;
  std::vector<CellLabel> direct_;
  std::vector<char> was_shown_;
  std::vector<std::size_t> shown_;
  std::vector<Submission> submissions_;
  std::optional<std::size_t> current_;
  std::size_t budget_ = 0;
  std::size_t remaining_ = 0;
  LabelStatus status_ = LabelStatus::kActive;
  LabelingConfig config_;
};

// Average-linkage agglomerative clustering of weighted points under
// Euclidean distance into `clusters` groups. Returns a cluster id per point.
// Ties merge the lowest-indexed pair first.
std::vector<std::size_t> AverageLinkage(const std::vector<VoteVector>& points,
                                        const std::vector<std::size_t>& weights,
                                        std::size_t clusters);

struct SimulationResult {
  std::vector<Submission> transcript;
  std::vector<Detection> detections;
  std::size_t reviewed_count = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  LabelStatus final_status = LabelStatus::kActive;
};

// Drives a session with the mask as the user: each shown tuple is labeled
// with its dirty cells, or skipped when it has none. mask is row-major.
// Throws kInvalidArgument on a size mismatch.
SimulationResult SimulateUser(const Table& table, const std::vector<char>& mask,
                              const DetectorOutputs& base, std::size_t budget,
                              LabelingConfig config = {});

// F1 of flagged cells against a row-major mask; 0 when nothing is flagged or
// nothing is dirty.
double DetectionF1(const std::vector<Detection>& detections,
                   const std::vector<char>& mask, std::size_t num_cols,
                   double* precision = nullptr, double* recall = nullptr);

}  // namespace lens

#endif  // LENS_LABELING_HPP_
