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

#include "lens/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "lens/error.hpp"
#include "lens/rng.hpp"

namespace lens {

Matrix Matrix::SelectRows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(indices[i] * cols), cols,
                out.data.begin() + static_cast<std::ptrdiff_t>(i * cols));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Encoding

double EncodingSpec::EncodeCell(const Table& table, std::size_t row,
                                std::size_t feature) const {
  const FeatureEncoding& enc = features[feature];
  if (enc.kind == FeatureKind::kNumeric) {
    const double value = table.numeric(row, enc.column).value_or(enc.mean);
    return (value - enc.mean) / enc.std;
  }
  if (table.is_missing(row, enc.column)) return enc.reserved_code();
  const std::string& raw = table.raw(row, enc.column);
  const auto it = std::find(enc.categories.begin(), enc.categories.end(), raw);
  if (it == enc.categories.end()) return enc.reserved_code();
  return static_cast<double>(it - enc.categories.begin());
}

Matrix EncodingSpec::Transform(const Table& table) const {
  Matrix out(table.num_rows(), features.size());
  for (std::size_t f = 0; f < features.size(); ++f) {
    const FeatureEncoding& enc = features[f];
    if (enc.kind == FeatureKind::kNumeric) {
      for (std::size_t r = 0; r < table.num_rows(); ++r) {
        out.at(r, f) = EncodeCell(table, r, f);
      }
      continue;
    }
    std::unordered_map<std::string_view, double> codes;
    for (std::size_t i = 0; i < enc.categories.size(); ++i) {
      codes.emplace(enc.categories[i], static_cast<double>(i));
    }
    for (std::size_t r = 0; r < table.num_rows(); ++r) {
      if (table.is_missing(r, enc.column)) {
        out.at(r, f) = enc.reserved_code();
        continue;
      }
      const auto it = codes.find(table.raw(r, enc.column));
      out.at(r, f) = it == codes.end() ? enc.reserved_code() : it->second;
    }
  }
  return out;
}

std::vector<bool> EncodingSpec::CategoricalMask() const {
  std::vector<bool> mask;
  for (const auto& enc : features) mask.push_back(enc.kind == FeatureKind::kCategorical);
  return mask;
}

std::pair<Matrix, EncodingSpec> Encode(const Table& table,
                                       std::span<const std::size_t> feature_cols,
                                       std::span<const std::size_t> fit_rows) {
  if (fit_rows.empty()) Fail(ErrorCode::kInvalidArgument, "encoding needs fit rows");
  EncodingSpec spec;
  for (std::size_t col : feature_cols) {
    if (col >= table.num_cols()) {
      Fail(ErrorCode::kInvalidArgument, "feature column out of range");
    }
    FeatureEncoding enc;
    enc.column = col;
    if (table.is_numeric(col)) {
      enc.kind = FeatureKind::kNumeric;
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t r : fit_rows) {
        if (auto v = table.numeric(r, col)) {
          sum += *v;
          ++count;
        }
      }
      if (count > 0) {
        enc.mean = sum / static_cast<double>(count);
        double squares = 0.0;
        for (std::size_t r : fit_rows) {
          if (auto v = table.numeric(r, col)) squares += (*v - enc.mean) * (*v - enc.mean);
        }
        const double std = std::sqrt(squares / static_cast<double>(count));
        enc.std = std > 0.0 ? std : 1.0;
      }
    } else {
      enc.kind = FeatureKind::kCategorical;
      std::unordered_map<std::string_view, std::size_t> seen;
      for (std::size_t r : fit_rows) {
        if (table.is_missing(r, col)) continue;
        const std::string& raw = table.raw(r, col);
        if (seen.emplace(raw, enc.categories.size()).second) {
          enc.categories.push_back(raw);
        }
      }
    }
    spec.features.push_back(std::move(enc));
  }
  Matrix encoded = spec.Transform(table);
  return {std::move(encoded), std::move(spec)};
}

// ---------------------------------------------------------------------------
// Decision tree

namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const double> y, TreeTask task,
              const TreeParams& params, std::size_t num_classes,
              std::vector<TreeNode>& nodes)
      : x_(x), y_(y), task_(task), params_(params), num_classes_(num_classes),
        nodes_(nodes) {}

  int Build(std::vector<std::size_t>& rows, std::size_t depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    {
      TreeNode& node = nodes_.back();
      node.depth = depth;
      node.samples = rows.size();
      FillLeaf(rows, node);
    }
    if (depth >= params_.max_depth || rows.size() < 2 * params_.min_samples_leaf ||
        IsPure(rows)) {
      return id;
    }
    const SplitChoice split = BestSplit(rows);
    if (split.feature < 0) return id;
    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (x_.at(r, static_cast<std::size_t>(split.feature)) <= split.threshold ? left : right)
          .push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int left_id = Build(left, depth + 1);
    const int right_id = Build(right, depth + 1);
    TreeNode& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left_id;
    node.right = right_id;
    return id;
  }

 private:
  void FillLeaf(const std::vector<std::size_t>& rows, TreeNode& node) const {
    if (task_ == TreeTask::kRegression) {
      double sum = 0.0;
      for (std::size_t r : rows) sum += y_[r];
      node.value = rows.empty() ? 0.0 : sum / static_cast<double>(rows.size());
      return;
    }
    node.class_counts.assign(num_classes_, 0.0);
    for (std::size_t r : rows) node.class_counts[static_cast<std::size_t>(y_[r])] += 1.0;
    const auto best = std::max_element(node.class_counts.begin(), node.class_counts.end());
    node.value = static_cast<double>(best - node.class_counts.begin());
  }

  bool IsPure(const std::vector<std::size_t>& rows) const {
    for (std::size_t r : rows) {
      if (y_[r] != y_[rows.front()]) return false;
    }
    return true;
  }

  // Weighted impurity n * criterion.
  double Impurity(double n, double sum, double sum_sq,
                  const std::vector<double>& counts) const {
    if (n <= 0.0) return 0.0;
    if (task_ == TreeTask::kRegression) return std::max(0.0, sum_sq - sum * sum / n);
    double squares = 0.0;
    for (double c : counts) squares += c * c;
    return n - squares / n;
  }

  SplitChoice BestSplit(const std::vector<std::size_t>& rows) const {
    const double n = static_cast<double>(rows.size());
    double total_sum = 0.0, total_sq = 0.0;
    std::vector<double> total_counts(task_ == TreeTask::kClassification ? num_classes_ : 0, 0.0);
    for (std::size_t r : rows) {
      total_sum += y_[r];
      total_sq += y_[r] * y_[r];
      if (task_ == TreeTask::kClassification) total_counts[static_cast<std::size_t>(y_[r])] += 1.0;
    }
    const double parent = Impurity(n, total_sum, total_sq, total_counts);
    const double tolerance = 1e-12 * std::max(1.0, parent);
    SplitChoice best;
    std::vector<std::size_t> order(rows);
    const std::size_t min_leaf = std::max<std::size_t>(1, params_.min_samples_leaf);
    for (std::size_t f = 0; f < x_.cols; ++f) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = x_.at(a, f), vb = x_.at(b, f);
        return va < vb || (va == vb && a < b);
      });
      double left_sum = 0.0, left_sq = 0.0;
      std::vector<double> left_counts(total_counts.size(), 0.0);
      std::vector<double> right_counts = total_counts;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const double yi = y_[order[i]];
        left_sum += yi;
        left_sq += yi * yi;
        if (task_ == TreeTask::kClassification) {
          left_counts[static_cast<std::size_t>(yi)] += 1.0;
          right_counts[static_cast<std::size_t>(yi)] -= 1.0;
        }
        const std::size_t left_n = i + 1;
        const std::size_t right_n = order.size() - left_n;
        if (left_n < min_leaf) continue;
        if (right_n < min_leaf) break;
        const double lo = x_.at(order[i], f);
        const double hi = x_.at(order[i + 1], f);
        if (!(lo < hi)) continue;
        const double children =
            Impurity(static_cast<double>(left_n), left_sum, left_sq, left_counts) +
            Impurity(static_cast<double>(right_n), total_sum - left_sum,
                     total_sq - left_sq, right_counts);
        const double gain = parent - children;
        if (gain > tolerance && gain > best.gain + tolerance) {
          double threshold = lo + (hi - lo) / 2.0;
          if (!(threshold < hi)) threshold = lo;
          best = {static_cast<int>(f), threshold, gain};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const double> y_;
  TreeTask task_;
  TreeParams params_;
  std::size_t num_classes_;
  std::vector<TreeNode>& nodes_;
};

}  // namespace

DecisionTreeModel FitTree(const Matrix& x, std::span<const double> y,
                          TreeTask task, const TreeParams& params,
                          std::uint64_t /*seed*/) {
  if (x.rows != y.size()) {
    Fail(ErrorCode::kInvalidArgument, "feature rows and targets differ in length");
  }
  if (x.rows == 0) Fail(ErrorCode::kInvalidArgument, "cannot fit a tree on no rows");
  DecisionTreeModel model;
  model.task_ = task;
  model.num_features_ = x.cols;
  if (task == TreeTask::kClassification) {
    double max_code = 0.0;
    for (double v : y) {
      if (v < 0.0 || v != std::floor(v)) {
        Fail(ErrorCode::kInvalidArgument, "class targets must be non-negative integers");
      }
      max_code = std::max(max_code, v);
    }
    model.num_classes_ = static_cast<std::size_t>(max_code) + 1;
  }
  std::vector<std::size_t> rows(x.rows);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  TreeBuilder builder(x, y, task, params, model.num_classes_, model.nodes_);
  builder.Build(rows, 0);
  return model;
}

std::size_t DecisionTreeModel::depth() const {
  std::size_t deepest = 0;
  for (const auto& node : nodes_) deepest = std::max(deepest, node.depth);
  return deepest;
}

double DecisionTreeModel::PredictRow(std::span<const double> x) const {
  if (x.size() != num_features_) {
    Fail(ErrorCode::kInvalidArgument, "feature arity differs from training data");
  }
  std::size_t id = 0;
  while (!nodes_[id].is_leaf()) {
    const TreeNode& node = nodes_[id];
    id = static_cast<std::size_t>(
        x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
  }
  return nodes_[id].value;
}

std::vector<double> DecisionTreeModel::Predict(const Matrix& x) const {
  if (x.cols != num_features_) {
    Fail(ErrorCode::kInvalidArgument, "feature arity differs from training data");
  }
  std::vector<double> out(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) out[r] = PredictRow(x.row(r));
  return out;
}

// ---------------------------------------------------------------------------
// k-NN

KnnModel FitKnn(Matrix x, std::vector<int> labels, std::vector<bool> categorical,
                std::size_t k) {
  if (x.rows == 0) Fail(ErrorCode::kInvalidArgument, "k-NN needs training rows");
  if (k == 0) Fail(ErrorCode::kInvalidArgument, "k must be at least 1");
  if (labels.size() != x.rows || categorical.size() != x.cols) {
    Fail(ErrorCode::kInvalidArgument, "k-NN training data size mismatch");
  }
  return KnnModel{std::move(x), std::move(labels), std::move(categorical), k};
}

namespace {

int PredictOne(const KnnModel& model, std::span<const double> query,
               std::vector<std::pair<double, std::size_t>>& scratch) {
  scratch.clear();
  for (std::size_t i = 0; i < model.x.rows; ++i) {
    const auto row = model.x.row(i);
    double d = 0.0;
    for (std::size_t f = 0; f < row.size(); ++f) {
      if (model.categorical[f]) {
        d += row[f] == query[f] ? 0.0 : 1.0;
      } else {
        const double diff = row[f] - query[f];
        d += diff * diff;
      }
    }
    scratch.emplace_back(d, i);
  }
  const std::size_t k = std::min(model.k, scratch.size());
  std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k),
                    scratch.end());
  // Votes in neighbor rank order; the first class to reach the maximum count
  // when scanning by rank is the tied class with the nearest member.
  std::vector<std::pair<int, std::size_t>> votes;  // (label, count)
  for (std::size_t i = 0; i < k; ++i) {
    const int label = model.labels[scratch[i].second];
    auto it = std::find_if(votes.begin(), votes.end(),
                           [&](const auto& v) { return v.first == label; });
    if (it == votes.end()) {
      votes.emplace_back(label, 1);
    } else {
      ++it->second;
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < votes.size(); ++i) {
    if (votes[i].second > votes[best].second) best = i;
  }
  return votes[best].first;
}

}  // namespace

std::vector<int> PredictKnn(const KnnModel& model, const Matrix& queries, Exec exec) {
  if (queries.cols != model.x.cols) {
    Fail(ErrorCode::kInvalidArgument, "query arity differs from training data");
  }
  std::vector<int> out(queries.rows);
  if (exec == Exec::kSerial) {
    std::vector<std::pair<double, std::size_t>> scratch;
    for (std::size_t q = 0; q < queries.rows; ++q) {
      out[q] = PredictOne(model, queries.row(q), scratch);
    }
    return out;
  }
  const long long count = static_cast<long long>(queries.rows);
#pragma omp parallel
  {
    std::vector<std::pair<double, std::size_t>> scratch;
#pragma omp for schedule(static)
    for (long long q = 0; q < count; ++q) {
      out[static_cast<std::size_t>(q)] =
          PredictOne(model, queries.row(static_cast<std::size_t>(q)), scratch);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Isolation forest

double AveragePathLength(std::size_t n) {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  constexpr double kEulerGamma = 0.5772156649015329;
  const double m = static_cast<double>(n - 1);
  return 2.0 * (std::log(m) + kEulerGamma) - 2.0 * m / static_cast<double>(n);
}

namespace {

int GrowIsolationTree(const Matrix& x, std::vector<std::size_t>& rows,
                      std::size_t begin, std::size_t end, std::size_t depth,
                      std::size_t height_limit, Rng& rng, IsolationTree& tree) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back({});
  tree.nodes.back().size = end - begin;
  if (end - begin <= 1 || depth >= height_limit) return id;

  std::vector<std::size_t> candidates;
  std::vector<std::pair<double, double>> ranges;
  for (std::size_t f = 0; f < x.cols; ++f) {
    double lo = x.at(rows[begin], f), hi = lo;
    for (std::size_t i = begin + 1; i < end; ++i) {
      const double v = x.at(rows[i], f);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (lo < hi) {
      candidates.push_back(f);
      ranges.emplace_back(lo, hi);
    }
  }
  if (candidates.empty()) return id;
  const std::size_t pick = rng.UniformIndex(candidates.size());
  const std::size_t feature = candidates[pick];
  const auto [lo, hi] = ranges[pick];
  double split = rng.Uniform(lo, hi);
  if (split >= hi) split = lo;
  const auto middle = std::partition(
      rows.begin() + static_cast<std::ptrdiff_t>(begin),
      rows.begin() + static_cast<std::ptrdiff_t>(end),
      [&](std::size_t r) { return x.at(r, feature) <= split; });
  const auto mid = static_cast<std::size_t>(middle - rows.begin());
  const int left = GrowIsolationTree(x, rows, begin, mid, depth + 1, height_limit, rng, tree);
  const int right = GrowIsolationTree(x, rows, mid, end, depth + 1, height_limit, rng, tree);
  IsolationNode& node = tree.nodes[static_cast<std::size_t>(id)];
  node.feature = static_cast<int>(feature);
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

double PathLength(const IsolationTree& tree, std::span<const double> x) {
  std::size_t id = 0;
  double depth = 0.0;
  while (tree.nodes[id].feature >= 0) {
    const IsolationNode& node = tree.nodes[id];
    id = static_cast<std::size_t>(
        x[static_cast<std::size_t>(node.feature)] <= node.split ? node.left : node.right);
    depth += 1.0;
  }
  return depth + AveragePathLength(tree.nodes[id].size);
}

}  // namespace

IsolationForestModel FitIsolationForest(const Matrix& x,
                                        const IsolationForestConfig& config,
                                        Exec exec) {
  if (x.rows < 2) Fail(ErrorCode::kInvalidArgument, "isolation forest needs two rows");
  if (config.n_trees == 0 || config.subsample < 2) {
    Fail(ErrorCode::kInvalidArgument, "isolation forest needs trees and a subsample >= 2");
  }
  IsolationForestModel model;
  model.subsample_ = std::min(config.subsample, x.rows);
  model.num_features_ = x.cols;
  model.trees_.resize(config.n_trees);
  const auto height_limit = static_cast<std::size_t>(
      std::ceil(std::log2(static_cast<double>(model.subsample_))));
  ForEachIndex(exec, config.n_trees, [&](std::size_t t) {
    Rng rng(config.seed + t);
    std::vector<std::size_t> rows = rng.SampleWithoutReplacement(x.rows, model.subsample_);
    GrowIsolationTree(x, rows, 0, rows.size(), 0, height_limit, rng, model.trees_[t]);
  });
  return model;
}

std::vector<double> IsolationForestModel::Score(const Matrix& x, Exec exec) const {
  if (x.cols != num_features_) {
    Fail(ErrorCode::kInvalidArgument, "feature arity differs from training data");
  }
  const double norm = AveragePathLength(subsample_);
  std::vector<double> scores(x.rows);
  ForEachIndex(exec, x.rows, [&](std::size_t r) {
    double total = 0.0;
    for (const auto& tree : trees_) total += PathLength(tree, x.row(r));
    const double mean = total / static_cast<double>(trees_.size());
    scores[r] = std::pow(2.0, -mean / norm);
  });
  return scores;
}

std::vector<double> IsolationScores(const Matrix& x, const IsolationForestConfig& config,
                                    Exec exec) {
  return FitIsolationForest(x, config, exec).Score(x, exec);
}

}  // namespace lens
