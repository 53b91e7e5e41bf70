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
#include <set>
#include <string>
#include <vector>

#include "lens/detectors.hpp"
#include "lens/error.hpp"
#include "lens/profiler.hpp"
#include "lens/rng.hpp"
#include "lens/rules.hpp"
#include "test_support.hpp"

namespace lens {
namespace {

using testing::CodeOf;
using testing::MakeTable;

// Type-7 quantile written straight from the definition h = (n-1)q.
double QuantileOracle(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const double lo = std::floor(h);
  const std::size_t i = static_cast<std::size_t>(lo);
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (h - lo) * (v[i + 1] - v[i]);
}

TEST(Quantile, Examples) {
  std::vector<double> a = {1, 2, 3, 4, 100};
  std::vector<double> b = {1, 3};
  std::vector<double> c = {7};
  EXPECT_DOUBLE_EQ(Quantile(a, 0.75), 4.0);
  EXPECT_DOUBLE_EQ(Quantile(b, 0.5), 2.0);
  for (double q : {0.0, 0.3, 1.0}) EXPECT_DOUBLE_EQ(Quantile(c, q), 7.0);
  std::vector<double> empty;
  EXPECT_EQ(CodeOf([&] { Quantile(empty, 0.5); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([&] { Quantile(a, 1.5); }), ErrorCode::kInvalidArgument);
}

TEST(QuantileProperty, MatchesOracleMonotoneAndBounded) {
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> v(1 + rng.UniformIndex(30));
    for (double& x : v) x = std::round(rng.Normal(0, 10));
    const double lo = *std::min_element(v.begin(), v.end());
    const double hi = *std::max_element(v.begin(), v.end());
    double previous = -INFINITY;
    for (int step = 0; step <= 20; ++step) {
      const double q = step / 20.0;
      const double got = Quantile(v, q);
      EXPECT_NEAR(got, QuantileOracle(v, q), 1e-9);
      EXPECT_GE(got, lo);
      EXPECT_LE(got, hi);
      EXPECT_GE(got, previous);
      previous = got;
    }
  }
}

TEST(Profile, ClosedFormMoments) {
  ProfileReport report = Profile(testing::NumericColumn({1, 2, 3}));
  ASSERT_TRUE(report.columns[0].numeric.has_value());
  EXPECT_DOUBLE_EQ(report.columns[0].numeric->mean, 2.0);
  EXPECT_NEAR(report.columns[0].numeric->std, 0.816496580927726, 1e-12);
  EXPECT_DOUBLE_EQ(report.columns[0].numeric->median, 2.0);
}

TEST(Profile, IdenticalColumnsCorrelatePerfectly) {
  Table t = MakeTable({"a", "b", "k"}, {{"1", "1", "5"}, {"4", "4", "5"}, {"2", "2", "5"}});
  ProfileReport report = Profile(t);
  ASSERT_EQ(report.numeric_columns.size(), 3u);
  EXPECT_NEAR(*report.correlations[0][1], 1.0, 1e-12);
  // Constant column: undefined, not zero.
  EXPECT_FALSE(report.correlations[0][2].has_value());
}

TEST(Profile, CountsMissingDistinctAndTopK) {
  Table t = MakeTable({"c"}, {{"x"}, {"y"}, {"x"}, {"NA"}, {""}});
  ProfileReport report = Profile(t);
  const ColumnProfile& c = report.columns[0];
  EXPECT_EQ(c.count, 5u);
  EXPECT_EQ(c.missing_count, 2u);
  EXPECT_EQ(c.distinct_count, 2u);
  ASSERT_EQ(c.top_k.size(), 2u);
  EXPECT_EQ(c.top_k[0], (std::pair<std::string, std::size_t>{"x", 2}));
}

TEST(Profile, SerialAndParallelAgree) {
  Rng rng(8);
  std::vector<std::vector<std::string>> rows;
  for (int r = 0; r < 300; ++r) {
    rows.push_back({FormatDecimal(rng.Normal()), FormatDecimal(rng.Normal(5, 2)),
                    "g" + std::to_string(rng.UniformIndex(4))});
  }
  Table t = MakeTable({"a", "b", "g"}, rows);
  nlohmann::json serial = Profile(t, Exec::kSerial);
  nlohmann::json parallel = Profile(t, Exec::kParallel);
  serial.erase("generated_at");
  parallel.erase("generated_at");
  EXPECT_EQ(serial, parallel);
}

TEST(ProfileProperty, RowPermutationInvariant) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<std::string>> rows;
    for (int r = 0; r < 40; ++r) {
      rows.push_back({std::to_string(rng.UniformIndex(10)),
                      FormatDecimal(rng.Normal()),
                      std::string(1, static_cast<char>('a' + rng.UniformIndex(3)))});
    }
    Table t = MakeTable({"i", "f", "s"}, rows);
    rng.Shuffle(std::span<std::vector<std::string>>(rows));
    Table u = MakeTable({"i", "f", "s"}, rows);
    ProfileReport a = Profile(t), b = Profile(u);
    EXPECT_EQ(a.duplicate_row_count, b.duplicate_row_count);
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_EQ(a.columns[c].distinct_count, b.columns[c].distinct_count);
      EXPECT_EQ(a.columns[c].top_k, b.columns[c].top_k);
      if (a.columns[c].numeric) {
        EXPECT_NEAR(a.columns[c].numeric->mean, b.columns[c].numeric->mean, 1e-12);
        EXPECT_NEAR(a.columns[c].numeric->std, b.columns[c].numeric->std, 1e-12);
        EXPECT_EQ(a.columns[c].numeric->q1, b.columns[c].numeric->q1);
        EXPECT_EQ(a.columns[c].numeric->q3, b.columns[c].numeric->q3);
      }
    }
    EXPECT_NEAR(*a.correlations[0][1], *b.correlations[0][1], 1e-12);
  }
}

TEST(PearsonProperty, AffineImagesCorrelateToOne) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::optional<double>> x, y;
    const double a = 0.01 + rng.Uniform(0, 50), b = rng.Uniform(-100, 100);
    for (int i = 0; i < 30; ++i) {
      const double v = rng.Normal(0, 3);
      x.push_back(v);
      y.push_back(a * v + b);
    }
    EXPECT_NEAR(*Pearson(x, y), 1.0, 1e-9);
  }
}

// Brute-force duplicate count: a row is redundant when an earlier row equals it.
std::size_t DuplicateOracle(const std::vector<std::vector<std::string>>& rows) {
  std::size_t redundant = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (rows[i] == rows[j]) {
        ++redundant;
        break;
      }
    }
  }
  return redundant;
}

TEST(QualityMetrics, Examples) {
  Table clean = MakeTable({"a", "b"}, {{"1", "x"}, {"2", "y"}});
  QualityMetrics m = ComputeQualityMetrics(clean, DetectionReport{}, RuleSet{});
  EXPECT_DOUBLE_EQ(m.completeness, 1.0);
  EXPECT_DOUBLE_EQ(m.error_rate, 0.0);

  std::vector<std::vector<std::string>> grid(10, std::vector<std::string>(10, "1"));
  for (std::size_t r = 0; r < 10; ++r) grid[r][0] = std::to_string(r);
  grid[0][1] = "NA";
  grid[1][1] = "";
  std::vector<std::string> headers;
  for (int c = 0; c < 10; ++c) headers.push_back("c" + std::to_string(c));
  Table ten = MakeTable(headers, grid);
  std::vector<Detection> five;
  for (std::size_t r = 0; r < 5; ++r) five.push_back({{r, 2}, DetectorKind::kSD, ""});
  std::vector<std::vector<Detection>> inputs = {five};
  m = ComputeQualityMetrics(ten, Consolidate(ten, inputs), RuleSet{});
  EXPECT_DOUBLE_EQ(m.error_rate, 0.05);
  EXPECT_DOUBLE_EQ(m.completeness, 0.98);

  Table two_missing = MakeTable({"a", "b"}, {{"1", "NA"}, {"2", "x"}, {"3", "y"}, {"", "z"}, {"5", "w"}});
  EXPECT_DOUBLE_EQ(ComputeQualityMetrics(two_missing, {}, {}).completeness, 0.8);
}

TEST(QualityMetrics, DuplicateRateMatchesOracle) {
  std::vector<std::vector<std::string>> rows = {{"1", "a"}, {"2", "b"}, {"1", "a"}, {"3", "c"}};
  Table t = MakeTable({"n", "s"}, rows);
  EXPECT_EQ(DuplicateRowCount(t), DuplicateOracle(rows));
  EXPECT_DOUBLE_EQ(ComputeQualityMetrics(t, {}, {}).duplicate_row_rate, 0.25);

  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::vector<std::string>> random(1 + rng.UniformIndex(30));
    for (auto& row : random) {
      row = {std::to_string(rng.UniformIndex(3)), std::to_string(rng.UniformIndex(3))};
    }
    EXPECT_EQ(DuplicateRowCount(MakeTable({"a", "b"}, random)), DuplicateOracle(random));
  }
}

TEST(QualityMetrics, RuleViolationRateCountsEnforcedRulesOnly) {
  Table t = MakeTable({"zip", "city"}, {{"1", "A"}, {"1", "B"}, {"2", "C"}, {"3", "D"}});
  RuleSet rules = AddCustomRule({}, {"zip"}, {"city"}, t);
  EXPECT_DOUBLE_EQ(ComputeQualityMetrics(t, {}, rules).rule_violation_rate, 0.5);
  rules.rules[0].status = RuleStatus::kGenerated;
  EXPECT_DOUBLE_EQ(ComputeQualityMetrics(t, {}, rules).rule_violation_rate, 0.0);
}

}  // namespace
}  // namespace lens
