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

#include "lens/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "lens/error.hpp"

namespace lens {

using nlohmann::json;

std::string_view LabelStatusName(LabelStatus status) {
  switch (status) {
    case LabelStatus::kActive: return "Active";
    case LabelStatus::kExhausted: return "Exhausted";
    case LabelStatus::kComplete: return "Complete";
  }
  return "Active";
}

void to_json(json& j, const Submission& submission) {
  j = json{{"row", submission.row}, {"dirty_cols", submission.dirty_cols}};
}

void from_json(const json& j, Submission& submission) {
  submission.row = j.at("row").get<std::size_t>();
  submission.dirty_cols = j.at("dirty_cols").get<std::vector<std::string>>();
}

namespace {

double VoteDistance(const VoteVector& a, const VoteVector& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

}  // namespace

std::vector<std::size_t> AverageLinkage(const std::vector<VoteVector>& points,
                                        const std::vector<std::size_t>& weights,
                                        std::size_t clusters) {
  const std::size_t n = points.size();
  std::vector<std::size_t> assignment(n);
  if (n == 0) return assignment;
  clusters = std::clamp<std::size_t>(clusters, 1, n);
  // Active clusters in index order; members tracked for the final labels.
  std::vector<std::vector<std::size_t>> members(n);
  std::vector<double> weight(n);
  for (std::size_t i = 0; i < n; ++i) {
    members[i] = {i};
    weight[i] = static_cast<double>(weights[i]);
  }
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist[i][j] = dist[j][i] = VoteDistance(points[i], points[j]);
    }
  }
  std::vector<std::size_t> active(n);
  for (std::size_t i = 0; i < n; ++i) active[i] = i;
  while (active.size() > clusters) {
    std::size_t best_a = 0, best_b = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < active.size(); ++a) {
      for (std::size_t b = a + 1; b < active.size(); ++b) {
        const double d = dist[active[a]][active[b]];
        if (d < best) {
          best = d;
          best_a = a;
          best_b = b;
        }
      }
    }
    const std::size_t keep = active[best_a];
    const std::size_t drop = active[best_b];
    // Lance-Williams update for average linkage.
    for (std::size_t other : active) {
      if (other == keep || other == drop) continue;
      const double merged =
          (weight[keep] * dist[keep][other] + weight[drop] * dist[drop][other]) /
          (weight[keep] + weight[drop]);
      dist[keep][other] = dist[other][keep] = merged;
    }
    weight[keep] += weight[drop];
    members[keep].insert(members[keep].end(), members[drop].begin(), members[drop].end());
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_b));
  }
  for (std::size_t c = 0; c < active.size(); ++c) {
    for (std::size_t point : members[active[c]]) assignment[point] = c;
  }
  return assignment;
}

LabelSession LabelSession::Start(const Table& table, const DetectorOutputs& base,
                                 std::size_t budget, LabelingConfig config) {
  if (budget < 1) Fail(ErrorCode::kInvalidArgument, "labeling budget must be at least 1");
  LabelSession session;
  session.num_rows_ = table.num_rows();
  for (const auto& column : table.columns()) session.column_names_.push_back(column.name);
  const std::size_t cols = table.num_cols();
  session.votes_.assign(table.num_cells(), VoteVector{});
  for (const auto& [kind, detections] : base) {
    const auto coordinate = static_cast<std::size_t>(kind);
    if (coordinate >= kNumBaseDetectors) continue;
    for (const auto& d : detections) {
      if (!table.Contains(d.cell)) {
        Fail(ErrorCode::kInvalidArgument, "base detection outside the table");
      }
      session.votes_[d.cell.row * cols + d.cell.col][coordinate] = 1;
    }
  }
  session.distinct_.resize(cols);
  session.distinct_weight_.resize(cols);
  session.cell_distinct_.resize(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    std::map<VoteVector, std::size_t> counts;
    for (std::size_t r = 0; r < table.num_rows(); ++r) ++counts[session.votes_[r * cols + c]];
    std::map<VoteVector, std::size_t> index;
    for (const auto& [vector, count] : counts) {
      index[vector] = session.distinct_[c].size();
      session.distinct_[c].push_back(vector);
      session.distinct_weight_[c].push_back(count);
    }
    session.cell_distinct_[c].resize(table.num_rows());
    for (std::size_t r = 0; r < table.num_rows(); ++r) {
      session.cell_distinct_[c][r] = index.at(session.votes_[r * cols + c]);
    }
  }
  session.direct_.assign(table.num_cells(), CellLabel::kUnlabeled);
  session.was_shown_.assign(table.num_rows(), 0);
  session.budget_ = budget;
  session.remaining_ = budget;
  session.config_ = config;
  return session;
}

LabelSession LabelSession::Replay(const Table& table, const DetectorOutputs& base,
                                  std::size_t budget, LabelingConfig config,
                                  const std::vector<Submission>& submissions,
                                  bool require_complete) {
  LabelSession session = Start(table, base, budget, config);
  for (const auto& submission : submissions) {
    if (session.status() != LabelStatus::kActive) {
      Fail(ErrorCode::kReplayDivergence, "recorded labels extend past the end of the session");
    }
    const auto row = session.NextTuple();
    if (!row || *row != submission.row) {
      Fail(ErrorCode::kReplayDivergence,
           "labeling session selected a different tuple than the recording");
    }
    session.Submit(*row, submission.dirty_cols);
  }
  if (session.status() == LabelStatus::kActive) session.NextTuple();
  if (require_complete && session.status() == LabelStatus::kActive) {
    Fail(ErrorCode::kReplayDivergence, "recorded labels end before the session does");
  }
  return session;
}

std::size_t LabelSession::ClusterCount(std::size_t col) const {
  return std::min(round() + 2, distinct_[col].size());
}

std::vector<std::size_t> LabelSession::ColumnClusters(std::size_t col) const {
  const std::vector<std::size_t> of_distinct =
      AverageLinkage(distinct_[col], distinct_weight_[col], ClusterCount(col));
  std::vector<std::size_t> out(num_rows_);
  for (std::size_t r = 0; r < num_rows_; ++r) out[r] = of_distinct[cell_distinct_[col][r]];
  return out;
}

std::optional<std::size_t> LabelSession::NextTuple() {
  if (status_ != LabelStatus::kActive) {
    Fail(ErrorCode::kFailedPrecondition,
         "labeling session is " + std::string(LabelStatusName(status_)), "session_closed");
  }
  if (current_) return current_;
  if (shown_.size() >= num_rows_ || round() >= max_reviews()) {
    status_ = LabelStatus::kExhausted;
    return std::nullopt;
  }
  const std::size_t cols = column_names_.size();
  std::vector<std::size_t> utility(num_rows_, 0);
  for (std::size_t c = 0; c < cols; ++c) {
    const std::vector<std::size_t> clusters = ColumnClusters(c);
    std::vector<char> labeled(num_rows_ + 1, 0);
    for (std::size_t r = 0; r < num_rows_; ++r) {
      if (direct_[r * cols + c] != CellLabel::kUnlabeled) labeled[clusters[r]] = 1;
    }
    for (std::size_t r = 0; r < num_rows_; ++r) {
      if (!labeled[clusters[r]]) ++utility[r];
    }
  }
  std::optional<std::size_t> best;
  for (std::size_t r = 0; r < num_rows_; ++r) {
    if (was_shown_[r]) continue;
    if (!best || utility[r] > utility[*best]) best = r;
  }
  current_ = best;
  was_shown_[*best] = 1;
  shown_.push_back(*best);
  return current_;
}

void LabelSession::Submit(std::size_t row, const std::vector<std::string>& dirty_cols) {
  if (status_ != LabelStatus::kActive) {
    Fail(ErrorCode::kFailedPrecondition,
         "labeling session is " + std::string(LabelStatusName(status_)), "session_closed");
  }
  if (!current_ || *current_ != row) {
    Fail(ErrorCode::kInvalidArgument,
         "row " + std::to_string(row) + " is not the tuple under review");
  }
  const std::size_t cols = column_names_.size();
  std::vector<char> dirty(cols, 0);
  for (const auto& name : dirty_cols) {
    const auto it = std::find(column_names_.begin(), column_names_.end(), name);
    if (it == column_names_.end()) {
      Fail(ErrorCode::kInvalidArgument, "unknown column '" + name + "'");
    }
    dirty[static_cast<std::size_t>(it - column_names_.begin())] = 1;
  }
  for (std::size_t c = 0; c < cols; ++c) {
    direct_[row * cols + c] = dirty[c] ? CellLabel::kDirty : CellLabel::kClean;
  }
  Submission submission;
  submission.row = row;
  for (std::size_t c = 0; c < cols; ++c) {
    if (dirty[c]) submission.dirty_cols.push_back(column_names_[c]);
  }
  if (!submission.skipped()) --remaining_;
  submissions_.push_back(std::move(submission));
  current_.reset();
  if (remaining_ == 0) status_ = LabelStatus::kComplete;
}

PropagatedLabels LabelSession::Propagate() const {
  if (status_ == LabelStatus::kActive) {
    Fail(ErrorCode::kFailedPrecondition, "labeling session is still active");
  }
  const std::size_t cols = column_names_.size();
  PropagatedLabels out;
  out.num_rows = num_rows_;
  out.num_cols = cols;
  out.labels.assign(num_rows_ * cols, CellLabel::kUnlabeled);
  out.sources.assign(num_rows_ * cols, LabelSource::kNone);
  for (std::size_t c = 0; c < cols; ++c) {
    const std::vector<std::size_t> clusters = ColumnClusters(c);
    std::map<std::size_t, std::pair<std::size_t, std::size_t>> tally;  // dirty, clean
    for (std::size_t r = 0; r < num_rows_; ++r) {
      const CellLabel label = direct_[r * cols + c];
      if (label == CellLabel::kDirty) ++tally[clusters[r]].first;
      if (label == CellLabel::kClean) ++tally[clusters[r]].second;
    }
    for (std::size_t r = 0; r < num_rows_; ++r) {
      const std::size_t i = r * cols + c;
      if (direct_[i] != CellLabel::kUnlabeled) {
        out.labels[i] = direct_[i];
        out.sources[i] = LabelSource::kDirect;
        continue;
      }
      const auto it = tally.find(clusters[r]);
      if (it == tally.end()) continue;
      const auto [dirty, clean] = it->second;
      out.labels[i] = dirty >= clean ? CellLabel::kDirty : CellLabel::kClean;
      out.sources[i] = LabelSource::kPropagated;
    }
  }
  return out;
}

std::vector<Detection> LabelSession::TrainPredict(const PropagatedLabels& labels) const {
  const std::size_t cols = column_names_.size();
  std::vector<Detection> out;
  for (std::size_t c = 0; c < cols; ++c) {
    std::vector<std::size_t> labeled_rows;
    std::size_t dirty = 0;
    for (std::size_t r = 0; r < num_rows_; ++r) {
      const CellLabel label = labels.label(r, c);
      if (label == CellLabel::kUnlabeled) continue;
      labeled_rows.push_back(r);
      if (label == CellLabel::kDirty) ++dirty;
    }
    if (labeled_rows.empty() || dirty == 0) continue;
    if (dirty == labeled_rows.size()) {
      for (std::size_t r = 0; r < num_rows_; ++r) {
        out.push_back({{r, c}, DetectorKind::kMLDetector, "uniformly dirty labels"});
      }
      continue;
    }
    Matrix x(labeled_rows.size(), kNumBaseDetectors);
    std::vector<double> y(labeled_rows.size());
    for (std::size_t i = 0; i < labeled_rows.size(); ++i) {
      const VoteVector& v = votes(labeled_rows[i], c);
      for (std::size_t f = 0; f < kNumBaseDetectors; ++f) x.at(i, f) = v[f];
      y[i] = labels.label(labeled_rows[i], c) == CellLabel::kDirty ? 1.0 : 0.0;
    }
    const DecisionTreeModel tree =
        FitTree(x, y, TreeTask::kClassification, config_.tree, config_.seed + c);
    std::vector<double> features(kNumBaseDetectors);
    for (std::size_t r = 0; r < num_rows_; ++r) {
      const VoteVector& v = votes(r, c);
      for (std::size_t f = 0; f < kNumBaseDetectors; ++f) features[f] = v[f];
      if (tree.PredictRow(features) == 1.0) {
        out.push_back({{r, c}, DetectorKind::kMLDetector, "classifier predicts dirty"});
      }
    }
  }
  return out;
}

double DetectionF1(const std::vector<Detection>& detections, const std::vector<char>& mask,
                   std::size_t num_cols, double* precision, double* recall) {
  std::set<CellRef> flagged;
  for (const auto& d : detections) flagged.insert(d.cell);
  std::size_t dirty = 0;
  for (char m : mask) dirty += m ? 1 : 0;
  std::size_t hits = 0;
  for (const auto& cell : flagged) {
    if (mask[cell.row * num_cols + cell.col]) ++hits;
  }
  const double p = flagged.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(flagged.size());
  const double r = dirty == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(dirty);
  if (precision) *precision = p;
  if (recall) *recall = r;
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

SimulationResult SimulateUser(const Table& table, const std::vector<char>& mask,
                              const DetectorOutputs& base, std::size_t budget,
                              LabelingConfig config) {
  if (mask.size() != table.num_cells()) {
    Fail(ErrorCode::kInvalidArgument, "ground-truth mask does not match the table");
  }
  LabelSession session = LabelSession::Start(table, base, budget, config);
  while (session.status() == LabelStatus::kActive) {
    const auto row = session.NextTuple();
    if (!row) break;
    std::vector<std::string> dirty;
    for (std::size_t c = 0; c < table.num_cols(); ++c) {
      if (mask[*row * table.num_cols() + c]) dirty.push_back(table.column(c).name);
    }
    session.Submit(*row, dirty);
  }
  SimulationResult result;
  result.transcript = session.submissions();
  result.reviewed_count = session.reviewed_count();
  result.final_status = session.status();
  result.detections = session.TrainPredict(session.Propagate());
  result.f1 = DetectionF1(result.detections, mask, table.num_cols(), &result.precision,
                          &result.recall);
  return result;
}

}  // namespace lens
