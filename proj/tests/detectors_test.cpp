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
#include <chrono>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "lens/detectors.hpp"
#include "lens/error.hpp"
#include "lens/rng.hpp"
#include "lens/rules.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace lens {
namespace {

using testing::Cells;
using testing::CodeOf;
using testing::MakeTable;
using testing::NumericColumn;
using testing::Rows;

TEST(DetectSd, FenceIsStrictAndUsesPopulationStd) {
  // mean 20, std 40: |100 - 20| = 80 <= 120.
  EXPECT_TRUE(DetectSd(NumericColumn({0, 0, 0, 0, 100}), 0).empty());
  EXPECT_TRUE(DetectSd(NumericColumn({7, 7, 7}), 0).empty());
  std::vector<double> v(99, 0.0);
  v.push_back(1000);
  auto found = DetectSd(NumericColumn(v), 0);
  ASSERT_EQ(found.size(), 1u);
  EXPECT_EQ(found[0].cell.row, 99u);
  EXPECT_EQ(found[0].detector, DetectorKind::kSD);
}

TEST(DetectSd, BoundaryValueIsNotFlagged) {
  // mean 0 and std 1 exactly; with k = 1 the +-1 values sit on the fence.
  EXPECT_TRUE(DetectSd(NumericColumn({-1, 1, -1, 1}), 0, 1.0).empty());
}

TEST(DetectSd, Preconditions) {
  Table t = MakeTable({"s"}, {{"a"}, {"b"}});
  EXPECT_EQ(CodeOf([&] { DetectSd(t, 0); }), ErrorCode::kTypeMismatch);
  EXPECT_EQ(CodeOf([&] { DetectSd(t, 5); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { DetectSd(NumericColumn({1, 2}), 0, 0.0); }), ErrorCode::kInvalidArgument);
}

TEST(DetectIqr, Examples) {
  auto found = DetectIqr(NumericColumn({1, 2, 3, 4, 100}), 0);
  ASSERT_EQ(found.size(), 1u);
  EXPECT_EQ(found[0].cell.row, 4u);
  EXPECT_TRUE(DetectIqr(NumericColumn({5, 5, 5, 5}), 0).empty());
  EXPECT_TRUE(DetectIqr(NumericColumn({1, 2, 3, 4, 5}), 0).empty());
}

TEST(DetectSdIqr, IgnoreMissingCells) {
  std::vector<std::vector<std::string>> rows(40, {"1"});
  rows[3] = {"NA"};
  rows[7] = {""};
  rows[9] = {"500"};
  Table t = MakeTable({"x"}, rows);
  for (const auto& found : {DetectSd(t, 0), DetectIqr(t, 0)}) {
    for (const auto& d : found) EXPECT_FALSE(t.is_missing(d.cell.row, 0));
    EXPECT_EQ(Rows(found), std::set<std::size_t>{9});
  }
}

TEST(DetectSd, InjectedOutliersAreRecovered) {
  Rng rng(2024);
  std::vector<double> values(2000);
  std::vector<char> mask(values.size(), 0);
  for (double& v : values) v = rng.Normal();
  for (std::size_t i : rng.SampleWithoutReplacement(values.size(), values.size() / 20)) {
    mask[i] = 1;
  }
  // Injected at mean + 10 std of the clean column.
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mask[i]) values[i] = 10.0;
  }
  auto found = DetectSd(NumericColumn(values), 0, 3.0);
  std::size_t hits = 0, false_positives = 0;
  for (const auto& d : found) (mask[d.cell.row] ? hits : false_positives)++;
  EXPECT_GE(hits, static_cast<std::size_t>(0.95 * 100));
  EXPECT_LE(false_positives, static_cast<std::size_t>(0.01 * 1900));
}

Table FarPointTable() {
  std::vector<std::vector<std::string>> rows(50, {"0", "0", "k"});
  rows.push_back({"100", "100", "k"});
  return MakeTable({"a", "b", "label"}, rows);
}

TEST(DetectIsolationForest, FlagsTheOutlierRowNumericCells) {
  IsolationForestDetectorConfig config;
  config.forest.seed = 7;
  auto found = DetectIsolationForest(FarPointTable(), config);
  EXPECT_EQ(Cells(found), (std::set<CellRef>{{50, 0}, {50, 1}}));
}

TEST(DetectIsolationForest, IdenticalRowsAreClean) {
  std::vector<std::vector<std::string>> rows(16, {"3", "4"});
  EXPECT_TRUE(DetectIsolationForest(MakeTable({"a", "b"}, rows), {}).empty());
}

TEST(DetectIsolationForest, NeedsANumericColumn) {
  Table t = MakeTable({"s"}, {{"a"}, {"b"}});
  EXPECT_EQ(CodeOf([&] { DetectIsolationForest(t, {}); }), ErrorCode::kTypeMismatch);
}

TEST(DetectIsolationForest, FlaggedRowValuesSurvivePermutation) {
  Rng rng(3);
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < 200; ++i) {
    rows.push_back({FormatDecimal(std::round(rng.Normal(0, 1) * 100) / 100),
                    FormatDecimal(std::round(rng.Normal(0, 1) * 100) / 100)});
  }
  rows[17] = {"40", "-40"};
  rows[90] = {"-35", "30"};
  auto flagged_values = [](const Table& t) {
    std::set<std::vector<std::string>> out;
    for (std::size_t r : Rows(DetectIsolationForest(t, {}))) out.insert({t.raw(r, 0), t.raw(r, 1)});
    return out;
  };
  Table t = MakeTable({"a", "b"}, rows);
  rng.Shuffle(std::span<std::vector<std::string>>(rows));
  const auto before = flagged_values(t);
  EXPECT_TRUE(before.count({"40", "-40"}));
  EXPECT_TRUE(before.count({"-35", "30"}));
  EXPECT_EQ(flagged_values(MakeTable({"a", "b"}, rows)), before);
}

TEST(DetectMissing, TokensAreTrimmedBeforeMatching) {
  Table t = MakeTable({"a"}, {{"NA"}, {" na "}, {"0"}, {""}});
  EXPECT_EQ(Rows(DetectMissing(t, t.missing_tokens())), (std::set<std::size_t>{0, 1, 3}));
  MissingTokenSet custom({"0"});
  EXPECT_EQ(Rows(DetectMissing(t, custom)), std::set<std::size_t>{2});
}

TEST(DetectDisguised, IsolatedFrequentSentinelIsFlagged) {
  Rng rng(11);
  std::vector<double> v;
  for (int i = 0; i < 200; ++i) v.push_back(std::round(rng.Uniform(10, 20) * 100) / 100);
  for (int i = 0; i < 12; ++i) v.push_back(-1);
  Table t = NumericColumn(v);
  auto found = DetectDisguised(t);
  EXPECT_EQ(Rows(found).size(), 12u);
  for (const auto& d : found) EXPECT_EQ(t.raw(d.cell), "-1");
}

TEST(DetectDisguised, SentinelInsideTheRangeIsKept) {
  std::vector<double> v;
  for (int i = 0; i <= 200; ++i) v.push_back(-2.0 + 4.0 * i / 200.0);
  for (int i = 0; i < 12; ++i) v.push_back(-1);
  EXPECT_TRUE(DetectDisguised(NumericColumn(v)).empty());
}

TEST(DetectDisguised, RareExtremeIsKept) {
  std::vector<double> v;
  for (int i = 0; i < 200; ++i) v.push_back(10 + i % 10);
  for (int i = 0; i < 4; ++i) v.push_back(99999);
  EXPECT_TRUE(DetectDisguised(NumericColumn(v)).empty());
}

TEST(DetectDisguised, CategoricalPlaceholders) {
  Table t = MakeTable({"c"}, {{"unknown"}, {"Unknown "}, {"paris"}, {"N/A"}});
  EXPECT_EQ(Rows(DetectDisguised(t)), (std::set<std::size_t>{0, 1, 3}));
}

RuleSet Confirmed(const Table& t) {
  return AddCustomRule({}, {"zip"}, {"city"}, t);
}

TEST(DetectRuleViolations, FlagsNonModeDependents) {
  Table majority = MakeTable({"zip", "city"}, {{"1111", "A"}, {"1111", "A"}, {"1111", "B"}});
  EXPECT_EQ(Cells(DetectRuleViolations(majority, Confirmed(majority))),
            (std::set<CellRef>{{2, 1}}));
  Table tie = MakeTable({"zip", "city"}, {{"1111", "A"}, {"1111", "B"}});
  EXPECT_EQ(Cells(DetectRuleViolations(tie, Confirmed(tie))),
            (std::set<CellRef>{{0, 1}, {1, 1}}));
  EXPECT_TRUE(DetectRuleViolations(majority, DiscoverFds(majority)).empty());
}

TEST(DetectTagged, MatchesAcrossColumns) {
  Table t = MakeTable({"a", "b"}, {{"99999", "-1"}, {"-1", "x"}});
  EXPECT_EQ(Cells(DetectTagged(t, {{"99999"}})), (std::set<CellRef>{{0, 0}}));
  EXPECT_EQ(Cells(DetectTagged(t, {{"-1"}})), (std::set<CellRef>{{0, 1}, {1, 0}}));
  EXPECT_TRUE(DetectTagged(t, {}).empty());
}

TEST(MinK, Identities) {
  std::vector<std::vector<Detection>> reports = {
      {{{0, 0}, DetectorKind::kSD, ""}, {{1, 0}, DetectorKind::kSD, ""}},
      {{{0, 0}, DetectorKind::kIQR, ""}, {{2, 0}, DetectorKind::kIQR, ""}},
  };
  EXPECT_EQ(Cells(MinK(reports, 1)), (std::set<CellRef>{{0, 0}, {1, 0}, {2, 0}}));
  EXPECT_EQ(Cells(MinK(reports, 2)), (std::set<CellRef>{{0, 0}}));
  for (const auto& d : MinK(reports, 1)) EXPECT_EQ(d.detector, DetectorKind::kMinK);
  EXPECT_EQ(CodeOf([&] { MinK(reports, 0); }), ErrorCode::kInvalidArgument);
}

TEST(MinK, SameDetectorTwiceCountsOnce) {
  std::vector<std::vector<Detection>> reports = {
      {{{0, 0}, DetectorKind::kSD, ""}, {{0, 0}, DetectorKind::kSD, "dup"}},
      {{{0, 0}, DetectorKind::kSD, ""}}};
  EXPECT_TRUE(MinK(reports, 2).empty());
}

TEST(MinKProperty, UnionAndIntersection) {
  Rng rng(100);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + rng.UniformIndex(kNumBaseDetectors);
    auto reports = oracle::RandomReports(rng, 1 + rng.UniformIndex(20), 1 + rng.UniformIndex(5), d);
    EXPECT_EQ(Cells(MinK(reports, 1)), oracle::UnionCells(reports));
    EXPECT_EQ(Cells(MinK(reports, d)), oracle::IntersectionCells(reports));
    EXPECT_TRUE(MinK(reports, d + 1).empty());
  }
}

TEST(Consolidate, MergesProvenanceInEnumOrder) {
  Table t = MakeTable({"a", "b"}, {{"1", "2"}, {"3", "4"}});
  std::vector<std::vector<Detection>> reports = {
      {{{0, 1}, DetectorKind::kIQR, ""}}, {{{0, 1}, DetectorKind::kSD, ""}}};
  DetectionReport report = Consolidate(t, reports);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report.cells().at({0, 1}),
            (std::vector<DetectorKind>{DetectorKind::kSD, DetectorKind::kIQR}));
  EXPECT_EQ(report.histogram().at("b").at(DetectorKind::kSD), 1u);
  EXPECT_TRUE(Consolidate(t, std::vector<std::vector<Detection>>{}).empty());
  std::vector<std::vector<Detection>> outside = {{{{5, 0}, DetectorKind::kSD, ""}}};
  EXPECT_EQ(CodeOf([&] { Consolidate(t, outside); }), ErrorCode::kInvalidArgument);
}

TEST(ConsolidateProperty, IdempotentOrderFreeAndBalanced) {
  Rng rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t rows = 1 + rng.UniformIndex(15), cols = 1 + rng.UniformIndex(4);
    std::vector<std::string> headers;
    for (std::size_t c = 0; c < cols; ++c) headers.push_back("c" + std::to_string(c));
    Table t = MakeTable(headers, std::vector<std::vector<std::string>>(
                                     rows, std::vector<std::string>(cols, "1")));
    auto reports = oracle::RandomReports(rng, rows, cols, 1 + rng.UniformIndex(kNumBaseDetectors));
    DetectionReport report = Consolidate(t, reports);
    std::vector<std::vector<Detection>> again = {report.ToDetections()};
    EXPECT_EQ(Consolidate(t, again), report);
    std::reverse(reports.begin(), reports.end());
    EXPECT_EQ(Consolidate(t, reports), report);
    std::size_t histogram_total = 0, count_total = 0;
    for (const auto& [column, per_kind] : report.histogram()) {
      for (const auto& [kind, n] : per_kind) histogram_total += n;
    }
    for (const auto& [kind, n] : report.per_detector_counts()) count_total += n;
    EXPECT_EQ(histogram_total, count_total);
    EXPECT_EQ(report.CellSet(), oracle::UnionCells(reports));
  }
}

Table MixedTable() {
  Rng rng(8);
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < 120; ++i) {
    rows.push_back({std::to_string(i % 10), "z" + std::to_string(i % 10),
                    FormatDecimal(std::round(rng.Normal(5, 1) * 10) / 10), "ok"});
  }
  rows[4][2] = "90";
  rows[5][3] = "unknown";
  rows[6][1] = "z9";
  rows[7][2] = "NA";
  rows[8][2] = "99999";
  return MakeTable({"zip", "city", "v", "s"}, rows);
}

DetectorSuiteConfig AllBase() {
  DetectorSuiteConfig config;
  config.tools.assign(std::begin(kBaseDetectors), std::end(kBaseDetectors));
  config.tags.tags = {"99999"};
  return config;
}

TEST(RunDetectors, SerialAndParallelAgree) {
  Table t = MixedTable();
  RuleSet rules = AddCustomRule({}, {"zip"}, {"city"}, t);
  auto serial = RunDetectors(t, AllBase(), rules, Exec::kSerial);
  auto parallel = RunDetectors(t, AllBase(), rules, Exec::kParallel);
  ASSERT_EQ(serial.size(), kNumBaseDetectors);
  for (const auto& [kind, found] : serial) EXPECT_EQ(Cells(found), Cells(parallel.at(kind)));
  EXPECT_EQ(BuildReport(t, serial, std::nullopt), BuildReport(t, parallel, std::nullopt));
  EXPECT_TRUE(Cells(serial.at(DetectorKind::kRuleViolation)).count({6, 1}));
  EXPECT_TRUE(Cells(serial.at(DetectorKind::kUserTag)).count({8, 2}));
  EXPECT_TRUE(Cells(serial.at(DetectorKind::kDisguisedMissing)).count({5, 3}));
}

TEST(RunDetectors, SkipsMlAndMinK) {
  DetectorSuiteConfig config;
  config.tools = {DetectorKind::kMLDetector, DetectorKind::kMinK, DetectorKind::kSD};
  auto outputs = RunDetectors(MixedTable(), config, {});
  EXPECT_EQ(outputs.size(), 1u);
  EXPECT_TRUE(outputs.count(DetectorKind::kSD));
}

TEST(BuildReport, MinKKeepsAgreedCellsWithProvenance) {
  Table t = MixedTable();
  auto outputs = RunDetectors(t, AllBase(), {}, Exec::kSerial);
  DetectionReport all = BuildReport(t, outputs, std::nullopt);
  DetectionReport agreed = BuildReport(t, outputs, 2);
  ASSERT_FALSE(agreed.empty());
  for (const auto& [cell, kinds] : agreed.cells()) {
    EXPECT_EQ(kinds.back(), DetectorKind::kMinK);
    EXPECT_GE(kinds.size(), 3u);
    EXPECT_TRUE(all.Contains(cell));
  }
}

TEST(DetectorPermutation, RowsMoveWithTheData) {
  Table t = MixedTable();
  std::vector<std::size_t> perm(t.num_rows());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(4);
  rng.Shuffle(std::span<std::size_t>(perm));
  std::vector<std::vector<std::string>> rows(t.num_rows());
  for (std::size_t r = 0; r < t.num_rows(); ++r) {
    for (std::size_t c = 0; c < t.num_cols(); ++c) rows[perm[r]].push_back(t.raw(r, c));
  }
  Table p = MakeTable({"zip", "city", "v", "s"}, rows);
  RuleSet rules = AddCustomRule({}, {"zip"}, {"city"}, t);
  DetectorSuiteConfig config = AllBase();
  config.tools.erase(std::find(config.tools.begin(), config.tools.end(),
                               DetectorKind::kIsolationForest));
  auto a = RunDetectors(t, config, rules, Exec::kSerial);
  auto b = RunDetectors(p, config, rules, Exec::kSerial);
  for (const auto& [kind, found] : a) {
    std::set<CellRef> moved;
    for (const auto& cell : Cells(found)) moved.insert({perm[cell.row], cell.col});
    EXPECT_EQ(moved, Cells(b.at(kind))) << DetectorName(kind);
  }
}

TEST(DetectorNames, ParseAliasesAndRejectUnknown) {
  EXPECT_EQ(ParseDetectorKind("sd"), DetectorKind::kSD);
  EXPECT_EQ(ParseDetectorKind("IsolationForest"), DetectorKind::kIsolationForest);
  EXPECT_EQ(ParseDetectorKind("MINK"), DetectorKind::kMinK);
  for (DetectorKind kind : kBaseDetectors) EXPECT_EQ(ParseDetectorKind(DetectorName(kind)), kind);
  EXPECT_EQ(CodeOf([] { ParseDetectorKind("Foo"); }), ErrorCode::kUnknownTool);
}

TEST(DetectionJson, RoundTrip) {
  Table t = MixedTable();
  DetectionReport report = BuildReport(t, RunDetectors(t, AllBase(), {}), 1);
  nlohmann::json j = report;
  EXPECT_EQ(j["num_detected_cells"], report.size());
  EXPECT_TRUE(j.contains("per_detector_counts"));
  EXPECT_TRUE(j.contains("histogram"));
  EXPECT_EQ(j.get<DetectionReport>(), report);

  DetectorSuiteConfig config = AllBase();
  config.min_k = 3;
  config.isolation_forest.forest.seed = 9;
  config.sd_k = 2.5;
  nlohmann::json cj = config;
  EXPECT_EQ(nlohmann::json(cj.get<DetectorSuiteConfig>()), cj);
}

}  // namespace
}  // namespace lens
