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

#include "lens/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "lens/error.hpp"
#include "lens/rng.hpp"

namespace lens {
namespace {

using Clock = std::chrono::steady_clock;

constexpr std::size_t kNumDims = kNumSwitches + 1;

bool Dim(std::size_t ordinal, std::size_t d) {
  return (ordinal >> (kNumDims - 1 - d)) & 1u;
}

// Runs every switchable detector once; configurations then pick subsets.
// A detector that does not apply to the table (e.g. isolation forest without
// numeric columns) flags nothing.
DetectorOutputs RunSwitchDetectors(const Table& table, const RuleSet& rules,
                                   const PipelineDefaults& defaults,
                                   const std::vector<DetectorKind>& kinds, Exec exec) {
  DetectorOutputs all;
  for (DetectorKind kind : kinds) {
    DetectorSuiteConfig suite = defaults.detectors;
    suite.tools = {kind};
    suite.min_k.reset();
    try {
      DetectorOutputs one = RunDetectors(table, suite, rules, exec);
      all[kind] = std::move(one[kind]);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTypeMismatch) throw;
      all[kind] = {};
    }
  }
  return all;
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

Split SeededSplit(std::size_t n, const TaskSpec& task) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(task.seed);
  rng.Shuffle(std::span<std::size_t>(order));
  std::size_t n_train = static_cast<std::size_t>(std::floor(task.train_fraction * n));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  Split s;
  s.train.assign(order.begin(), order.begin() + n_train);
  s.test.assign(order.begin() + n_train, order.end());
  return s;
}

double Mse(std::span<const double> truth, std::span<const double> pred) {
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = truth[i] - pred[i];
    sum += d * d;
  }
  return sum / static_cast<double>(truth.size());
}

double MacroF1(const std::vector<std::string>& truth, const std::vector<std::string>& pred) {
  std::map<std::string, std::array<std::size_t, 3>> counts;  // tp, fp, fn
  for (const std::string& t : truth) counts[t];
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == pred[i]) {
      ++counts[truth[i]][0];
    } else {
      ++counts[truth[i]][2];
      auto it = counts.find(pred[i]);
      if (it != counts.end()) ++it->second[1];
    }
  }
  double sum = 0.0;
  for (const auto& [label, c] : counts) {
    const double denom = 2.0 * c[0] + c[1] + c[2];
    sum += denom == 0.0 ? 0.0 : 2.0 * c[0] / denom;
  }
  return sum / static_cast<double>(counts.size());
}

Score ScoreFromOutputs(const Table& table, const DetectorOutputs& all,
                       const CleaningConfig& config, const TaskSpec& task,
                       const PipelineDefaults& defaults, Exec exec) {
  DetectorOutputs chosen;
  for (DetectorKind kind : config.EnabledDetectors()) {
    auto it = all.find(kind);
    if (it != all.end()) chosen[kind] = it->second;
  }
  const DetectionReport report = BuildReport(table, chosen, std::nullopt);
  MlRepairConfig ml = defaults.ml_repair;
  ml.seed = task.seed;
  const Table repaired = report.cells().empty()
                             ? table
                             : Repair(table, report, config.repair, ml, exec).repaired;
  return ScoreTable(repaired, task);
}

bool Better(const Trial& a, const Trial& b) {
  if (a.score.BetterThan(b.score)) return true;
  if (b.score.BetterThan(a.score)) return false;
  return a.config.Ordinal() < b.config.Ordinal();
}

bool ReachedThreshold(const Score& s, const std::optional<double>& threshold) {
  if (!threshold) return false;
  return s.metric == MetricKind::kMse ? s.value <= *threshold : s.value >= *threshold;
}

void ValidateOptimizer(const OptimizerConfig& opt) {
  if (opt.n_trials < 1) Fail(ErrorCode::kInvalidArgument, "n_trials must be at least 1");
  if (!(opt.gamma > 0.0 && opt.gamma < 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "gamma must lie in (0, 1)");
  }
  if (opt.n_candidates < 1) Fail(ErrorCode::kInvalidArgument, "n_candidates must be at least 1");
  if (opt.n_startup < 1) Fail(ErrorCode::kInvalidArgument, "n_startup must be at least 1");
  if (!(opt.alpha > 0.0)) Fail(ErrorCode::kInvalidArgument, "alpha must be positive");
}

}  // namespace

std::size_t CleaningConfig::Ordinal() const {
  std::size_t out = 0;
  for (bool s : switches) out = (out << 1) | (s ? 1u : 0u);
  return (out << 1) | (repair == RepairKind::kMl ? 1u : 0u);
}

CleaningConfig CleaningConfig::FromOrdinal(std::size_t ordinal) {
  if (ordinal >= kSearchSpaceSize) {
    Fail(ErrorCode::kInvalidArgument, "config ordinal out of range");
  }
  CleaningConfig c;
  for (std::size_t d = 0; d < kNumSwitches; ++d) c.switches[d] = Dim(ordinal, d);
  c.repair = Dim(ordinal, kNumSwitches) ? RepairKind::kMl : RepairKind::kStandard;
  return c;
}

bool CleaningConfig::AllOff() const {
  return std::none_of(switches.begin(), switches.end(), [](bool s) { return s; });
}

std::vector<DetectorKind> CleaningConfig::EnabledDetectors() const {
  std::vector<DetectorKind> out;
  for (std::size_t d = 0; d < kNumSwitches; ++d) {
    if (switches[d]) out.push_back(kSwitchDetectors[d]);
  }
  return out;
}

std::string_view MetricName(MetricKind metric) {
  return metric == MetricKind::kMse ? "mse" : "f1_macro";
}

void ValidateTask(const Table& table, const TaskSpec& task) {
  const std::size_t col = table.ColumnIndex(task.target);
  const bool numeric = table.is_numeric(col);
  if (numeric != (task.task == TreeTask::kRegression)) {
    Fail(ErrorCode::kTypeMismatch,
         "task " + std::string(task.task == TreeTask::kRegression ? "regression" : "classification") +
             " does not match the type of column " + task.target);
  }
  if (table.num_rows() < 2) {
    Fail(ErrorCode::kInvalidArgument, "scoring needs at least two rows");
  }
  if (!(task.train_fraction > 0.0 && task.train_fraction < 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "train_fraction must lie in (0, 1)");
  }
}

Score ScoreTable(const Table& table, const TaskSpec& task) {
  ValidateTask(table, task);
  const std::size_t target = table.ColumnIndex(task.target);
  const bool regression = task.task == TreeTask::kRegression;
  Split split = SeededSplit(table.num_rows(), task);

  // Rows without a usable target value cannot be trained or scored on.
  auto usable = [&](std::size_t r) {
    if (table.is_missing(r, target)) return false;
    return !regression || table.numeric(r, target).has_value();
  };
  std::erase_if(split.train, [&](std::size_t r) { return !usable(r); });
  std::erase_if(split.test, [&](std::size_t r) { return !usable(r); });
  if (split.train.empty() || split.test.empty()) {
    Fail(ErrorCode::kFailedPrecondition, "no rows with a target value in the train or test split");
  }

  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < table.num_cols(); ++c) {
    if (c != target) feature_cols.push_back(c);
  }
  const auto [x, spec] = Encode(table, feature_cols, split.train);
  const Matrix x_train = x.SelectRows(split.train);
  const Matrix x_test = x.SelectRows(split.test);

  if (regression) {
    std::vector<double> y_train, y_test;
    for (std::size_t r : split.train) y_train.push_back(*table.numeric(r, target));
    for (std::size_t r : split.test) y_test.push_back(*table.numeric(r, target));
    const DecisionTreeModel model = FitTree(x_train, y_train, TreeTask::kRegression, task.model, task.seed);
    return {MetricKind::kMse, Mse(y_test, model.Predict(x_test))};
  }

  std::vector<std::string> classes;
  std::map<std::string, std::size_t> code;
  std::vector<double> y_train;
  for (std::size_t r : split.train) {
    const std::string& v = table.raw(r, target);
    auto [it, inserted] = code.emplace(v, classes.size());
    if (inserted) classes.push_back(v);
    y_train.push_back(static_cast<double>(it->second));
  }
  const DecisionTreeModel model = FitTree(x_train, y_train, TreeTask::kClassification, task.model, task.seed);
  const std::vector<double> pred_codes = model.Predict(x_test);
  std::vector<std::string> truth, pred;
  for (std::size_t i = 0; i < split.test.size(); ++i) {
    truth.push_back(table.raw(split.test[i], target));
    pred.push_back(classes[static_cast<std::size_t>(pred_codes[i])]);
  }
  return {MetricKind::kF1Macro, MacroF1(truth, pred)};
}

Score ScoreConfig(const Table& table, const RuleSet& rules, const CleaningConfig& config,
                  const TaskSpec& task, const PipelineDefaults& defaults, Exec exec) {
  ValidateTask(table, task);
  const DetectorOutputs all =
      RunSwitchDetectors(table, rules, defaults, config.EnabledDetectors(), exec);
  return ScoreFromOutputs(table, all, config, task, defaults, exec);
}

SearchResult ExhaustiveSearch(const Table& table, const RuleSet& rules, const TaskSpec& task,
                              const PipelineDefaults& defaults, Exec exec) {
  ValidateTask(table, task);
  const std::vector<DetectorKind> kinds(kSwitchDetectors.begin(), kSwitchDetectors.end());
  const DetectorOutputs all = RunSwitchDetectors(table, rules, defaults, kinds, exec);
  SearchResult result;
  result.history.resize(kSearchSpaceSize);
  ForEachIndex(exec, kSearchSpaceSize, [&](std::size_t i) {
    const auto start = Clock::now();
    Trial& t = result.history[i];
    t.index = i;
    t.config = CleaningConfig::FromOrdinal(i);
    t.score = ScoreFromOutputs(table, all, t.config, task, defaults, Exec::kSerial);
    t.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  });
  result.best = result.history.front();
  for (const Trial& t : result.history) {
    if (Better(t, result.best)) result.best = t;
  }
  return result;
}

std::size_t ProposeNext(const std::vector<Trial>& history, const std::vector<char>& visited,
                        const OptimizerConfig& optimizer, Rng& rng) {
  std::vector<const Trial*> ranked;
  for (const Trial& t : history) ranked.push_back(&t);
  std::sort(ranked.begin(), ranked.end(), [](const Trial* a, const Trial* b) {
    if (a->score.BetterThan(b->score)) return true;
    if (b->score.BetterThan(a->score)) return false;
    return a->index < b->index;
  });
  const std::size_t n_good = static_cast<std::size_t>(
      std::ceil(optimizer.gamma * static_cast<double>(ranked.size())));

  // Per-dimension probability of the "on" category in each set.
  std::array<double, kNumDims> p_good{}, p_bad{};
  for (std::size_t d = 0; d < kNumDims; ++d) {
    double good_on = 0, bad_on = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      const bool on = Dim(ranked[i]->config.Ordinal(), d);
      (i < n_good ? good_on : bad_on) += on ? 1.0 : 0.0;
    }
    const double n_bad = static_cast<double>(ranked.size() - n_good);
    p_good[d] = (good_on + optimizer.alpha) / (n_good + 2.0 * optimizer.alpha);
    p_bad[d] = (bad_on + optimizer.alpha) / (n_bad + 2.0 * optimizer.alpha);
  }

  std::optional<std::size_t> chosen;
  double best_ratio = 0.0;
  for (std::size_t k = 0; k < optimizer.n_candidates; ++k) {
    std::size_t ordinal = 0;
    double ratio = 1.0;
    for (std::size_t d = 0; d < kNumDims; ++d) {
      const bool on = rng.Bernoulli(p_good[d]);
      ordinal = (ordinal << 1) | (on ? 1u : 0u);
      ratio *= on ? p_good[d] / p_bad[d] : (1.0 - p_good[d]) / (1.0 - p_bad[d]);
    }
    if (visited[ordinal]) continue;
    if (!chosen || ratio > best_ratio) {
      chosen = ordinal;
      best_ratio = ratio;
    }
  }
  if (chosen) return *chosen;

  std::vector<std::size_t> open;
  for (std::size_t i = 0; i < kSearchSpaceSize; ++i) {
    if (!visited[i]) open.push_back(i);
  }
  if (open.empty()) Fail(ErrorCode::kFailedPrecondition, "search space exhausted");
  return open[rng.UniformIndex(open.size())];
}

SearchResult RunSearch(const Table& table, const RuleSet& rules, const TaskSpec& task,
                       const OptimizerConfig& optimizer, const PipelineDefaults& defaults) {
  ValidateOptimizer(optimizer);
  ValidateTask(table, task);
  const std::vector<DetectorKind> kinds(kSwitchDetectors.begin(), kSwitchDetectors.end());
  const DetectorOutputs all = RunSwitchDetectors(table, rules, defaults, kinds, Exec::kParallel);

  Rng rng(optimizer.seed);
  const std::size_t budget = std::min(optimizer.n_trials, kSearchSpaceSize);
  // The startup draw always has the same length so that trial sequences are
  // prefix-stable across n_trials.
  const std::vector<std::size_t> startup = rng.SampleWithoutReplacement(
      kSearchSpaceSize, std::min(optimizer.n_startup, kSearchSpaceSize));

  SearchResult result;
  std::vector<char> visited(kSearchSpaceSize, 0);
  auto evaluate = [&](Trial& t) {
    const auto start = Clock::now();
    t.score = ScoreFromOutputs(table, all, t.config, task, defaults, Exec::kSerial);
    t.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  };

  // Startup trials are independent, so they are scored concurrently.
  const std::size_t n_startup = std::min(budget, startup.size());
  result.history.resize(n_startup);
  for (std::size_t i = 0; i < n_startup; ++i) {
    result.history[i].index = i;
    result.history[i].config = CleaningConfig::FromOrdinal(startup[i]);
    visited[startup[i]] = 1;
  }
  ForEachIndex(Exec::kParallel, n_startup, [&](std::size_t i) { evaluate(result.history[i]); });

  std::optional<std::size_t> stop_at;
  for (std::size_t i = 0; i < n_startup; ++i) {
    if (ReachedThreshold(result.history[i].score, optimizer.stop_threshold)) {
      stop_at = i + 1;
      break;
    }
  }
  if (stop_at) {
    result.history.resize(*stop_at);
  } else {
    while (result.history.size() < budget) {
      Trial t;
      t.index = result.history.size();
      const std::size_t ordinal = ProposeNext(result.history, visited, optimizer, rng);
      visited[ordinal] = 1;
      t.config = CleaningConfig::FromOrdinal(ordinal);
      evaluate(t);
      result.history.push_back(t);
      if (ReachedThreshold(t.score, optimizer.stop_threshold)) break;
    }
  }

  result.best = result.history.front();
  for (const Trial& t : result.history) {
    if (Better(t, result.best)) result.best = t;
  }
  return result;
}

IterationCurve MakeIterationCurve(const std::vector<Trial>& history, double dirty_baseline,
                                  std::optional<double> clean_baseline) {
  if (history.empty()) Fail(ErrorCode::kInvalidArgument, "history is empty");
  IterationCurve curve;
  curve.metric = history.front().score.metric;
  curve.dirty_baseline = dirty_baseline;
  curve.clean_baseline = clean_baseline;
  Score best = history.front().score;
  for (const Trial& t : history) {
    if (t.score.BetterThan(best)) best = t.score;
    curve.points.push_back({t.index + 1, t.score.value, best.value});
  }
  return curve;
}

std::string IterationCurve::ToCsv() const {
  std::ostringstream out;
  out << "iteration,score,best_so_far,dirty_baseline,clean_baseline\n";
  for (const CurvePoint& p : points) {
    out << p.iteration << ',' << FormatDecimal(p.score) << ',' << FormatDecimal(p.best_so_far)
        << ',' << FormatDecimal(dirty_baseline) << ','
        << (clean_baseline ? FormatDecimal(*clean_baseline) : std::string()) << '\n';
  }
  return out.str();
}

void to_json(nlohmann::json& j, const CleaningConfig& config) {
  static constexpr std::array<const char*, kNumSwitches> kKeys = {"sd", "iqr", "if", "mv", "dm", "rv"};
  j = nlohmann::json::object();
  for (std::size_t d = 0; d < kNumSwitches; ++d) j[kKeys[d]] = config.switches[d];
  j["repair"] = RepairKindName(config.repair);
}

void from_json(const nlohmann::json& j, CleaningConfig& config) {
  static constexpr std::array<const char*, kNumSwitches> kKeys = {"sd", "iqr", "if", "mv", "dm", "rv"};
  for (std::size_t d = 0; d < kNumSwitches; ++d) {
    config.switches[d] = j.value(kKeys[d], false);
  }
  config.repair = ParseRepairKind(j.value("repair", std::string("standard")));
}

void to_json(nlohmann::json& j, const Trial& trial) {
  j = {{"index", trial.index},
       {"config", trial.config},
       {"metric", MetricName(trial.score.metric)},
       {"score", trial.score.value}};
}

nlohmann::json HistoryJson(const std::vector<Trial>& history) {
  nlohmann::json out = nlohmann::json::array();
  std::optional<Score> best;
  for (const Trial& t : history) {
    if (!best || t.score.BetterThan(*best)) best = t.score;
    out.push_back({{"index", t.index},
                   {"config", t.config},
                   {"score", t.score.value},
                   {"best_so_far", best->value}});
  }
  return out;
}

void to_json(nlohmann::json& j, const IterationCurve& curve) {
  nlohmann::json points = nlohmann::json::array();
  for (const CurvePoint& p : curve.points) {
    points.push_back({{"iteration", p.iteration}, {"score", p.score}, {"best_so_far", p.best_so_far}});
  }
  j = {{"metric", MetricName(curve.metric)},
       {"points", points},
       {"dirty_baseline", curve.dirty_baseline},
       {"clean_baseline", curve.clean_baseline ? nlohmann::json(*curve.clean_baseline) : nlohmann::json()}};
}

void to_json(nlohmann::json& j, const OptimizerConfig& config) {
  j = {{"n_trials", config.n_trials},
       {"n_startup", config.n_startup},
       {"gamma", config.gamma},
       {"n_candidates", config.n_candidates},
       {"alpha", config.alpha},
       {"seed", config.seed},
       {"stop_threshold", config.stop_threshold ? nlohmann::json(*config.stop_threshold) : nlohmann::json()}};
}

void from_json(const nlohmann::json& j, OptimizerConfig& config) {
  OptimizerConfig d;
  config.n_trials = j.value("n_trials", d.n_trials);
  config.n_startup = j.value("n_startup", d.n_startup);
  config.gamma = j.value("gamma", d.gamma);
  config.n_candidates = j.value("n_candidates", d.n_candidates);
  config.alpha = j.value("alpha", d.alpha);
  config.seed = j.value("seed", d.seed);
  config.stop_threshold.reset();
  if (j.contains("stop_threshold") && !j["stop_threshold"].is_null()) {
    config.stop_threshold = j["stop_threshold"].get<double>();
  }
}

void to_json(nlohmann::json& j, const TaskSpec& task) {
  j = {{"target", task.target},
       {"task", task.task == TreeTask::kRegression ? "regression" : "classification"},
       {"max_depth", task.model.max_depth},
       {"min_samples_leaf", task.model.min_samples_leaf},
       {"seed", task.seed},
       {"train_fraction", task.train_fraction}};
}

void from_json(const nlohmann::json& j, TaskSpec& task) {
  TaskSpec d;
  task.target = j.at("target").get<std::string>();
  const std::string kind = j.value("task", std::string("regression"));
  if (kind == "regression") {
    task.task = TreeTask::kRegression;
  } else if (kind == "classification") {
    task.task = TreeTask::kClassification;
  } else {
    Fail(ErrorCode::kInvalidArgument, "task must be regression or classification");
  }
  task.model.max_depth = j.value("max_depth", d.model.max_depth);
  task.model.min_samples_leaf = j.value("min_samples_leaf", d.model.min_samples_leaf);
  task.seed = j.value("seed", d.seed);
  task.train_fraction = j.value("train_fraction", d.train_fraction);
}

}  // namespace lens
