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
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "lens/detectors.hpp"
#include "lens/error.hpp"
#include "lens/labeling.hpp"
#include "lens/synthetic.hpp"
#include "test_support.hpp"

namespace lens {
namespace {

using testing::Cells;
using testing::CodeOf;
using testing::MakeTable;

Table Plain(std::size_t rows, std::size_t cols = 1) {
  std::vector<std::string> headers;
  for (std::size_t c = 0; c < cols; ++c) headers.push_back("c" + std::to_string(c));
  std::vector<std::vector<std::string>> grid(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) grid[r].push_back(std::to_string(r * cols + c));
  }
  return MakeTable(headers, grid);
}

DetectorOutputs BaseOutputs(const Table& t) {
  DetectorSuiteConfig config;
  config.tools.assign(std::begin(kBaseDetectors), std::end(kBaseDetectors));
  return RunDetectors(t, config, {}, Exec::kSerial);
}

TEST(LabelSession, StartState) {
  LabelSession s = LabelSession::Start(Plain(4), {}, 5);
  EXPECT_EQ(s.remaining_budget(), 5u);
  EXPECT_TRUE(s.shown().empty());
  EXPECT_EQ(s.status(), LabelStatus::kActive);
  EXPECT_EQ(s.max_reviews(), 25u);
  EXPECT_EQ(CodeOf([] { LabelSession::Start(Plain(4), {}, 0); }), ErrorCode::kInvalidArgument);
}

TEST(LabelSession, VoteVectorsUseDetectorOrder) {
  DetectorOutputs base;
  base[DetectorKind::kSD] = {{{1, 0}, DetectorKind::kSD, ""}};
  base[DetectorKind::kMissingValue] = {{{1, 0}, DetectorKind::kMissingValue, ""}};
  LabelSession s = LabelSession::Start(Plain(3), base, 1);
  EXPECT_EQ(s.votes(1, 0), (VoteVector{1, 0, 0, 1, 0, 0, 0}));
  EXPECT_EQ(s.votes(0, 0), (VoteVector{}));
}

TEST(LabelSession, UnflaggedTableIsServedInRowOrder) {
  LabelSession s = LabelSession::Start(Plain(6, 2), {}, 3);
  std::vector<std::size_t> order;
  while (auto row = s.NextTuple()) {
    order.push_back(*row);
    s.Submit(*row, {});
  }
  EXPECT_EQ(order, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(s.status(), LabelStatus::kExhausted);
  EXPECT_EQ(s.remaining_budget(), 3u);
}

TEST(LabelSession, SkipsAreFreeButCounted) {
  LabelSession s = LabelSession::Start(Plain(10), {}, 2);
  for (int i = 0; i < 3; ++i) s.Submit(*s.NextTuple(), {});
  EXPECT_EQ(s.remaining_budget(), 2u);
  EXPECT_EQ(s.shown().size(), 3u);
  EXPECT_EQ(s.reviewed_count(), 3u);
}

TEST(LabelSession, ReviewsCappedAtFiveTimesBudget) {
  LabelSession s = LabelSession::Start(Plain(20), {}, 1);
  std::size_t reviews = 0;
  while (auto row = s.NextTuple()) {
    s.Submit(*row, {});
    ++reviews;
  }
  EXPECT_EQ(reviews, 5u);
  EXPECT_EQ(s.status(), LabelStatus::kExhausted);
}

TEST(LabelSession, OneDirtySubmissionCompletesBudgetOne) {
  LabelSession s = LabelSession::Start(Plain(4), {}, 1);
  const std::size_t row = *s.NextTuple();
  EXPECT_EQ(s.NextTuple(), row);  // idempotent until submitted
  s.Submit(row, {"c0"});
  EXPECT_EQ(s.status(), LabelStatus::kComplete);
  EXPECT_EQ(s.remaining_budget(), 0u);
  try {
    s.NextTuple();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFailedPrecondition);
    EXPECT_EQ(e.reason(), "session_closed");
  }
}

TEST(LabelSession, SubmitValidation) {
  LabelSession s = LabelSession::Start(Plain(4), {}, 1);
  const std::size_t row = *s.NextTuple();
  EXPECT_EQ(CodeOf([&] { s.Submit(row + 1, {}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([&] { s.Submit(row, {"nope"}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([&] { s.Propagate(); }), ErrorCode::kFailedPrecondition);
}

TEST(LabelSession, LabelledOnlyClusterLeavesLowestUnshownRow) {
  LabelSession s = LabelSession::Start(Plain(5), {}, 3);
  EXPECT_EQ(*s.NextTuple(), 0u);
  s.Submit(0, {});
  // One distinct vote vector, one cluster, now labelled: every utility is 0.
  auto clusters = s.ColumnClusters(0);
  EXPECT_TRUE(std::all_of(clusters.begin(), clusters.end(), [](auto c) { return c == 0; }));
  EXPECT_EQ(*s.NextTuple(), 1u);
}

TEST(LabelSession, FlaggedRowsComeFirst) {
  Table t = MakeTable({"a"}, {{"1"}, {"1"}, {"NA"}, {"1"}});
  LabelSession s = LabelSession::Start(t, BaseOutputs(t), 1);
  // Two clusters in round 0; both unlabelled, tie broken by row index.
  EXPECT_EQ(*s.NextTuple(), 0u);
  s.Submit(0, {});
  // The clean cluster is now labelled, so the missing row has the highest utility.
  EXPECT_EQ(*s.NextTuple(), 2u);
}

TEST(Propagate, SingleClusterTakesTheDirtyLabel) {
  LabelSession s = LabelSession::Start(Plain(4), {}, 1);
  s.Submit(*s.NextTuple(), {"c0"});
  PropagatedLabels labels = s.Propagate();
  for (std::size_t r = 0; r < 4; ++r) EXPECT_EQ(labels.label(r, 0), CellLabel::kDirty);
  EXPECT_EQ(labels.source(0, 0), LabelSource::kDirect);
  EXPECT_EQ(labels.source(1, 0), LabelSource::kPropagated);
}

TEST(Propagate, TieGoesDirtyAndDirectLabelsStay) {
  LabelSession s = LabelSession::Start(Plain(4), {}, 1);
  s.Submit(*s.NextTuple(), {});      // row 0 clean
  s.Submit(*s.NextTuple(), {"c0"});  // row 1 dirty
  PropagatedLabels labels = s.Propagate();
  EXPECT_EQ(labels.label(0, 0), CellLabel::kClean);
  EXPECT_EQ(labels.source(0, 0), LabelSource::kDirect);
  EXPECT_EQ(labels.label(1, 0), CellLabel::kDirty);
  EXPECT_EQ(labels.label(2, 0), CellLabel::kDirty);
  EXPECT_EQ(labels.label(3, 0), CellLabel::kDirty);
}

TEST(Propagate, NoSubmissionsMeansNoLabels) {
  LabelSession s = LabelSession::Start(Plain(0, 2), {}, 1);
  EXPECT_FALSE(s.NextTuple().has_value());
  PropagatedLabels labels = s.Propagate();
  EXPECT_TRUE(labels.labels.empty());
  EXPECT_TRUE(s.TrainPredict(labels).empty());
}

TEST(TrainPredict, CleanOrUnlabelledColumnsYieldNothing) {
  LabelSession s = LabelSession::Start(Plain(3, 2), {}, 1);
  PropagatedLabels labels{3, 2,
                          std::vector<CellLabel>(6, CellLabel::kUnlabeled),
                          std::vector<LabelSource>(6, LabelSource::kNone)};
  EXPECT_TRUE(s.TrainPredict(labels).empty());
  for (std::size_t r = 0; r < 3; ++r) labels.labels[r * 2] = CellLabel::kClean;
  EXPECT_TRUE(s.TrainPredict(labels).empty());
}

TEST(TrainPredict, FollowsTheMissingValueVote) {
  std::vector<std::vector<std::string>> rows;
  for (int r = 0; r < 40; ++r) rows.push_back({r % 7 == 3 ? "NA" : std::to_string(r % 5), "x"});
  Table t = MakeTable({"m", "k"}, rows);
  DetectorOutputs base = BaseOutputs(t);
  std::vector<char> mask(t.num_cells(), 0);
  for (const auto& d : base.at(DetectorKind::kMissingValue)) mask[d.cell.row * 2 + d.cell.col] = 1;
  SimulationResult result = SimulateUser(t, mask, base, 3);
  std::set<CellRef> in_m;
  for (const auto& cell : Cells(result.detections)) {
    if (cell.col == 0) in_m.insert(cell);
  }
  EXPECT_EQ(in_m, Cells(base.at(DetectorKind::kMissingValue)));
  EXPECT_DOUBLE_EQ(result.f1, 1.0);
}

TEST(SimulateUser, CleanMaskSkipsUntilTheCap) {
  Table t = Plain(30, 2);
  std::vector<char> clean(t.num_cells(), 0);
  SimulationResult small = SimulateUser(t, clean, {}, 2);
  EXPECT_EQ(small.reviewed_count, 10u);
  EXPECT_TRUE(small.detections.empty());
  SimulationResult large = SimulateUser(t, clean, {}, 20);
  EXPECT_EQ(large.reviewed_count, 30u);
  EXPECT_EQ(large.final_status, LabelStatus::kExhausted);
}

TEST(SimulateUser, AllDirtyRowsSpendBudgetEveryReview) {
  Table t = Plain(30, 2);
  std::vector<char> dirty(t.num_cells(), 0);
  for (std::size_t r = 0; r < 30; ++r) dirty[r * 2] = 1;
  SimulationResult result = SimulateUser(t, dirty, {}, 7);
  EXPECT_EQ(result.reviewed_count, 7u);
  EXPECT_EQ(result.final_status, LabelStatus::kComplete);
}

TEST(SimulateUser, SyntheticBenchmarkReviewsMoreThanBudget) {
  SyntheticData data = LabelingBenchmark(3);
  SimulationResult result = SimulateUser(data.dirty, data.mask, BaseOutputs(data.dirty), 20);
  EXPECT_GT(result.reviewed_count, 20u);
  EXPECT_GT(result.f1, 0.0);
}

TEST(LabelingProperty, NoRepeatsAndBudgetAccounting) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    SyntheticData data = LabelingBenchmark(seed, 200, 0.05);
    const std::size_t budget = 3 + seed * 2;
    SimulationResult result = SimulateUser(data.dirty, data.mask, BaseOutputs(data.dirty), budget);
    std::set<std::size_t> rows;
    std::size_t dirty_rows_total = 0, skips = 0;
    for (const auto& s : result.transcript) {
      EXPECT_TRUE(rows.insert(s.row).second) << "row served twice";
      skips += s.skipped();
    }
    for (std::size_t r = 0; r < data.dirty.num_rows(); ++r) {
      bool any = false;
      for (std::size_t c = 0; c < data.dirty.num_cols(); ++c) any |= data.is_dirty(r, c);
      dirty_rows_total += any;
    }
    EXPECT_GE(result.reviewed_count, std::min(budget, dirty_rows_total));
    if (skips > 0) {
      EXPECT_GE(result.reviewed_count, budget);
    }
  }
}

TEST(LabelSession, ReplayReproducesAndDetectsDivergence) {
  SyntheticData data = LabelingBenchmark(5, 150);
  DetectorOutputs base = BaseOutputs(data.dirty);
  SimulationResult original = SimulateUser(data.dirty, data.mask, base, 4);
  LabelSession replayed =
      LabelSession::Replay(data.dirty, base, 4, {}, original.transcript);
  EXPECT_EQ(replayed.submissions(), original.transcript);
  EXPECT_EQ(Cells(replayed.TrainPredict(replayed.Propagate())), Cells(original.detections));

  auto tampered = original.transcript;
  tampered[0].row += 1;
  EXPECT_EQ(CodeOf([&] { LabelSession::Replay(data.dirty, base, 4, {}, tampered); }),
            ErrorCode::kReplayDivergence);
  auto truncated = original.transcript;
  truncated.pop_back();
  EXPECT_EQ(CodeOf([&] { LabelSession::Replay(data.dirty, base, 4, {}, truncated); }),
            ErrorCode::kReplayDivergence);
  EXPECT_EQ(LabelSession::Replay(data.dirty, base, 4, {}, truncated, false).status(),
            LabelStatus::kActive);
}

TEST(AverageLinkage, MergesNearestGroups) {
  std::vector<VoteVector> points = {VoteVector{}, VoteVector{1, 0, 0, 0, 0, 0, 0},
                                    VoteVector{1, 1, 1, 1, 0, 0, 0}};
  auto two = AverageLinkage(points, {1, 1, 1}, 2);
  EXPECT_EQ(two[0], two[1]);
  EXPECT_NE(two[0], two[2]);
  auto three = AverageLinkage(points, {1, 1, 1}, 3);
  EXPECT_EQ(std::set<std::size_t>(three.begin(), three.end()).size(), 3u);
}

TEST(SubmissionJson, RoundTrip) {
  Submission s{4, {"a", "b"}};
  EXPECT_EQ(nlohmann::json(s).get<Submission>(), s);
}

}  // namespace
}  // namespace lens
