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

#ifndef LENS_LEARNERS_HPP_
#define LENS_LEARNERS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lens/parallel.hpp"
#include "lens/table.hpp"

namespace lens {

// Dense row-major matrix of encoded features.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
  Matrix SelectRows(std::span<const std::size_t> indices) const;
};

enum class FeatureKind { kNumeric, kCategorical };

struct FeatureEncoding {
  std::size_t column = 0;
  FeatureKind kind = FeatureKind::kNumeric;
  // Numeric: z-normalization statistics of the fit rows. Missing cells take
  // the mean, i.e. encode to 0.
  double mean = 0.0;
  double std = 1.0;
  // Categorical: code i is categories[i]; categories.size() is the reserved
  // code for unseen and missing values.
  std::vector<std::string> categories;

  double reserved_code() const { return static_cast<double>(categories.size()); }
};

struct EncodingSpec {
  std::vector<FeatureEncoding> features;

  Matrix Transform(const Table& table) const;
  double EncodeCell(const Table& table, std::size_t row,
                    std::size_t feature) const;
  std::vector<bool> CategoricalMask() const;
};

// Fits the encoding on fit_rows only and transforms every row of the table.
// Throws kInvalidArgument on empty fit_rows or an out-of-range column.
std::pair<Matrix, EncodingSpec> Encode(const Table& table,
                                       std::span<const std::size_t> feature_cols,
                                       std::span<const std::size_t> fit_rows);

enum class TreeTask { kRegression, kClassification };

struct TreeParams {
  std::size_t max_depth = 8;
  std::size_t min_samples_leaf = 5;
};

struct TreeNode {
  // Internal nodes: rows with x[feature] <= threshold go left.
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::size_t depth = 0;
  std::size_t samples = 0;
  // Regression: mean target. Classification: majority class code.
  double value = 0.0;
  std::vector<double> class_counts;

  bool is_leaf() const { return feature < 0; }
};

class DecisionTreeModel {
 public:
  TreeTask task() const { return task_; }
  std::size_t num_features() const { return num_features_; }
  std::size_t num_classes() const { return num_classes_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t depth() const;

  // Throws kInvalidArgument when the arity differs from the training data.
  double PredictRow(std::span<const double> x) const;
  std::vector<double> Predict(const Matrix& x) const;

 private:
  friend DecisionTreeModel FitTree(const Matrix&, std::span<const double>,
                                   TreeTask, const TreeParams&, std::uint64_t);
  TreeTask task_ = TreeTask::kRegression;
  std::size_t num_features_ = 0;
  std::size_t num_classes_ = 0;
  std::vector<TreeNode> nodes_;
};

// CART with exhaustive split search: variance reduction for regression, Gini
// for classification (targets are class codes 0..C-1). Equal-gain splits are
// resolved toward the lowest feature index, then the lowest threshold, so the
// result does not depend on the seed; the seed is accepted for interface
// uniformity with the other learners.
DecisionTreeModel FitTree(const Matrix& x, std::span<const double> y,
                          TreeTask task, const TreeParams& params = {},
                          std::uint64_t seed = 0);

struct KnnModel {
  Matrix x;
  std::vector<int> labels;
  std::vector<bool> categorical;
  std::size_t k = 5;
};

// Throws kInvalidArgument on empty training data, k == 0 or size mismatch.
KnnModel FitKnn(Matrix x, std::vector<int> labels, std::vector<bool> categorical,
                std::size_t k = 5);

// Euclidean over numeric features plus a 0/1 mismatch per categorical
// feature. Distance ties go to the lower training row; vote ties go to the
// tied class whose member ranks nearest.
std::vector<int> PredictKnn(const KnnModel& model, const Matrix& queries,
                            Exec exec = Exec::kParallel);

struct IsolationForestConfig {
  std::size_t n_trees = 100;
  std::size_t subsample = 256;
  std::uint64_t seed = 0;
};

// Average unsuccessful-search path length of a BST with n nodes.
double AveragePathLength(std::size_t n);

struct IsolationNode {
  int feature = -1;
  double split = 0.0;
  int left = -1;
  int right = -1;
  std::size_t size = 0;
};

struct IsolationTree {
  std::vector<IsolationNode> nodes;
};

class IsolationForestModel {
 public:
  const std::vector<IsolationTree>& trees() const { return trees_; }
  std::size_t subsample() const { return subsample_; }

  // s(x) = 2^(-E[h(x)] / c(subsample)).
  std::vector<double> Score(const Matrix& x, Exec exec = Exec::kParallel) const;

 private:
  friend IsolationForestModel FitIsolationForest(const Matrix&,
                                                 const IsolationForestConfig&,
                                                 Exec);
  std::size_t subsample_ = 0;
  std::size_t num_features_ = 0;
  std::vector<IsolationTree> trees_;
};

// Tree t draws from Rng(seed + t), so trees can be grown in any order.
// Throws kInvalidArgument with fewer than two rows.
IsolationForestModel FitIsolationForest(const Matrix& x,
                                        const IsolationForestConfig& config,
                                        Exec exec = Exec::kParallel);

std::vector<double> IsolationScores(const Matrix& x,
                                    const IsolationForestConfig& config,
                                    Exec exec = Exec::kParallel);

}  // namespace lens

#endif  // LENS_LEARNERS_HPP_
