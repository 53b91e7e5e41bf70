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


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "lens/error.hpp"
#include "lens/learners.hpp"
#include "lens/rng.hpp"
#include "test_support.hpp"

namespace lens {
namespace {

using testing::CodeOf;
using testing::MakeTable;

Matrix Column(const std::vector<double>& values) {
  Matrix m(values.size(), 1);
  for (std::size_t i = 0; i < values.size(); ++i) m.at(i, 0) = values[i];
  return m;
}

TEST(Encode, CategoriesInFirstAppearanceOrder) {
  Table t = MakeTable({"c"}, {{"b"}, {"a"}, {"b"}});
  std::vector<std::size_t> cols = {0}, rows = {0, 1, 2};
  auto [x, spec] = Encode(t, cols, rows);
  EXPECT_EQ(spec.features[0].categories, (std::vector<std::string>{"b", "a"}));
  EXPECT_EQ(x.at(0, 0), 0.0);
  EXPECT_EQ(x.at(1, 0), 1.0);
  EXPECT_EQ(spec.CategoricalMask(), std::vector<bool>{true});

  Table unseen = MakeTable({"c"}, {{"z"}, {"NA"}});
  Matrix y = spec.Transform(unseen);
  EXPECT_EQ(y.at(0, 0), spec.features[0].reserved_code());
  EXPECT_EQ(y.at(1, 0), 2.0);
}

TEST(Encode, NumericMissingTakesFitMean) {
  Table t = MakeTable({"n", "tag"}, {{"1", "x"}, {"3", "x"}, {"NA", "x"}, {"2", "x"}});
  std::vector<std::size_t> cols = {0}, rows = {0, 1, 2, 3};
  auto [x, spec] = Encode(t, cols, rows);
  EXPECT_DOUBLE_EQ(spec.features[0].mean, 2.0);
  EXPECT_DOUBLE_EQ(x.at(2, 0), 0.0);
  EXPECT_NEAR(x.at(0, 0), -1.0 / std::sqrt(2.0 / 3.0), 1e-12);
  std::vector<std::size_t> none;
  EXPECT_EQ(CodeOf([&] { Encode(t, cols, none); }), ErrorCode::kInvalidArgument);
}

TEST(FitTree, ConstantTargetIsOneLeaf) {
  std::vector<double> y(6, 4.5);
  auto model = FitTree(Column({0, 1, 2, 3, 4, 5}), y, TreeTask::kRegression);
  EXPECT_EQ(model.nodes().size(), 1u);
  EXPECT_DOUBLE_EQ(model.PredictRow(std::vector<double>{9.0}), 4.5);
}

// Exhaustive oracle: every midpoint threshold that perfectly separates.
std::vector<double> SeparatingThresholds(const std::vector<double>& x,
                                         const std::vector<double>& y) {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double t = (x[i] + x[i + 1]) / 2.0;
    bool ok = true;
    for (std::size_t j = 0; j < x.size(); ++j) {
      for (std::size_t k = 0; k < x.size(); ++k) {
        if ((x[j] <= t) == (x[k] <= t) && y[j] != y[k]) ok = false;
      }
    }
    if (ok) out.push_back(t);
  }
  return out;
}

TEST(FitTree, SeparatesTwoClassesAtTheGap) {
  std::vector<double> xs = {0, 1, 2, 3}, y = {0, 0, 1, 1};
  auto oracle = SeparatingThresholds(xs, y);
  ASSERT_EQ(oracle.size(), 1u);
  auto model = FitTree(Column(xs), y, TreeTask::kClassification, {8, 1});
  const TreeNode& root = model.nodes()[0];
  EXPECT_EQ(root.feature, 0);
  EXPECT_GT(root.threshold, 1.0);
  EXPECT_LT(root.threshold, 2.0);
  EXPECT_DOUBLE_EQ(root.threshold, oracle[0]);
  EXPECT_EQ(model.Predict(Column(xs)), y);
}

TEST(FitTree, RegressionNeverWorseThanTheMean) {
  std::vector<double> xs(10), y(10);
  std::iota(xs.begin(), xs.end(), 0.0);
  y = xs;
  auto model = FitTree(Column(xs), y, TreeTask::kRegression, {8, 5});
  auto pred = model.Predict(Column(xs));
  double mse = 0.0, var = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    mse += (pred[i] - y[i]) * (pred[i] - y[i]);
    var += (y[i] - 4.5) * (y[i] - 4.5);
  }
  EXPECT_LE(mse, var);
  for (const auto& node : model.nodes()) {
    if (node.is_leaf()) EXPECT_GE(node.samples, 5u);
  }
}

TEST(FitTree, Preconditions) {
  std::vector<double> y = {0.5};
  EXPECT_EQ(CodeOf([&] { FitTree(Column({1}), y, TreeTask::kClassification); }),
            ErrorCode::kInvalidArgument);
  std::vector<double> two = {0, 1};
  EXPECT_EQ(CodeOf([&] { FitTree(Column({1}), two, TreeTask::kRegression); }),
            ErrorCode::kInvalidArgument);
}

TEST(FitTreeProperty, SeparableDataIsFitExactly) {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + rng.UniformIndex(60), d = 1 + rng.UniformIndex(3);
    Matrix x(n, d);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t f = 0; f < d; ++f) x.at(i, f) = static_cast<double>(i * 7 % 13) + f + 0.01 * i;
      y[i] = static_cast<double>(rng.UniformIndex(3));
    }
    auto model = FitTree(x, y, TreeTask::kClassification, {64, 1});
    EXPECT_EQ(model.Predict(x), y);
  }
}

// Brute force: sort by (distance, index), majority of the first k, ties go to
// the class whose member ranks first.
int KnnOracle(const Matrix& x, const std::vector<int>& labels, const std::vector<bool>& cat,
              std::span<const double> q, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t i = 0; i < x.rows; ++i) {
    double s = 0;
    for (std::size_t f = 0; f < x.cols; ++f) {
      s += cat[f] ? (x.at(i, f) != q[f]) : std::pow(x.at(i, f) - q[f], 2);
    }
    d.push_back({s, i});
  }
  std::sort(d.begin(), d.end());
  k = std::min(k, d.size());
  std::map<int, std::size_t> count, first_rank;
  for (std::size_t i = 0; i < k; ++i) {
    const int l = labels[d[i].second];
    if (!count.count(l)) first_rank[l] = i;
    ++count[l];
  }
  int best = -1;
  for (const auto& [label, c] : count) {
    if (best < 0 || c > count[best] || (c == count[best] && first_rank[label] < first_rank[best])) {
      best = label;
    }
  }
  return best;
}

TEST(Knn, Examples) {
  Matrix train = Column({0, 10, 20});
  auto one = FitKnn(train, {7, 8, 9}, {false}, 1);
  EXPECT_EQ(PredictKnn(one, Column({11, 0, 19})), (std::vector<int>{8, 7, 9}));
  // k capped at n: all three vote, majority wins.
  auto capped = FitKnn(train, {1, 2, 2}, {false}, 5);
  EXPECT_EQ(PredictKnn(capped, Column({0})), std::vector<int>{2});
  EXPECT_EQ(CodeOf([&] { FitKnn(train, {1, 2, 2}, {false}, 0); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([&] { PredictKnn(one, Matrix(1, 2)); }), ErrorCode::kInvalidArgument);
}

TEST(KnnProperty, MatchesBruteForceAndParallelAgrees) {
  Rng rng(9);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng.UniformIndex(50), d = 1 + rng.UniformIndex(4);
    Matrix x(n, d), q(30, d);
    std::vector<bool> cat(d);
    for (std::size_t f = 0; f < d; ++f) cat[f] = rng.Bernoulli(0.3);
    auto fill = [&](Matrix& m) {
      for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t f = 0; f < d; ++f) {
          m.at(i, f) = cat[f] ? static_cast<double>(rng.UniformIndex(3)) : std::round(rng.Normal(0, 2));
        }
      }
    };
    fill(x);
    fill(q);
    std::vector<int> labels(n);
    for (int& l : labels) l = static_cast<int>(rng.UniformIndex(3));
    const std::size_t k = 1 + rng.UniformIndex(7);
    auto model = FitKnn(x, labels, cat, k);
    auto serial = PredictKnn(model, q, Exec::kSerial);
    EXPECT_EQ(serial, PredictKnn(model, q, Exec::kParallel));
    for (std::size_t i = 0; i < q.rows; ++i) {
      EXPECT_EQ(serial[i], KnnOracle(x, labels, cat, q.row(i), k));
    }
  }
}

TEST(Knn, ZeroDistanceNeighbourIsIncluded) {
  Matrix train = Column({0, 1, 2, 3, 4});
  auto model = FitKnn(train, {0, 0, 1, 0, 0}, {false}, 1);
  EXPECT_EQ(PredictKnn(model, Column({2}))[0], 1);
}

Matrix FarPoint() {
  Matrix x(51, 2);
  x.at(50, 0) = 100;
  x.at(50, 1) = 100;
  return x;
}

TEST(IsolationForest, FarPointScoresHighest) {
  auto scores = IsolationScores(FarPoint(), {100, 256, 42});
  const auto top = std::max_element(scores.begin(), scores.end()) - scores.begin();
  EXPECT_EQ(top, 50);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_LT(scores[i], scores[50]);
  for (double s : scores) {
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
  }
}

TEST(IsolationForest, IdenticalRowsScoreEqually) {
  Matrix x(20, 3);
  for (double& v : x.data) v = 5.0;
  auto scores = IsolationScores(x, {50, 16, 1});
  for (double s : scores) EXPECT_EQ(s, scores[0]);
}

TEST(IsolationForest, DeterministicAndParallelSafe) {
  Rng rng(1);
  Matrix x(300, 3);
  for (double& v : x.data) v = rng.Normal();
  IsolationForestConfig config{64, 128, 99};
  auto a = IsolationScores(x, config, Exec::kSerial);
  EXPECT_EQ(a, IsolationScores(x, config, Exec::kSerial));
  EXPECT_EQ(a, IsolationScores(x, config, Exec::kParallel));
  config.seed = 100;
  EXPECT_NE(a, IsolationScores(x, config, Exec::kSerial));
}

TEST(IsolationForestProperty, ShiftingAFeatureChangesNothing) {
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix x(120, 2);
    for (double& v : x.data) v = static_cast<double>(rng.UniformIndex(4096)) / 8.0;
    Matrix shifted = x;
    for (std::size_t i = 0; i < x.rows; ++i) shifted.at(i, trial % 2) += 1024.0;
    IsolationForestConfig config{50, 64, static_cast<std::uint64_t>(trial)};
    auto a = IsolationScores(x, config), b = IsolationScores(shifted, config);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  }
}

TEST(IsolationForest, Preconditions) {
  EXPECT_EQ(CodeOf([] { IsolationScores(Matrix(1, 1), {}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { IsolationScores(Matrix(4, 1), {0, 256, 0}); }),
            ErrorCode::kInvalidArgument);
  EXPECT_DOUBLE_EQ(AveragePathLength(2), 1.0);
  EXPECT_DOUBLE_EQ(AveragePathLength(1), 0.0);
}

}  // namespace
}  // namespace lens
