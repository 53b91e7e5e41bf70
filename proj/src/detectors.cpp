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

#include "lens/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "lens/error.hpp"
#include "lens/profiler.hpp"

namespace lens {

using nlohmann::json;

std::string_view DetectorName(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::kSD: return "SD";
    case DetectorKind::kIQR: return "IQR";
    case DetectorKind::kIsolationForest: return "IsolationForest";
    case DetectorKind::kMissingValue: return "MissingValue";
    case DetectorKind::kDisguisedMissing: return "DisguisedMissing";
    case DetectorKind::kRuleViolation: return "RuleViolation";
    case DetectorKind::kUserTag: return "UserTag";
    case DetectorKind::kMLDetector: return "MLDetector";
    case DetectorKind::kMinK: return "MinK";
  }
  return "SD";
}

DetectorKind ParseDetectorKind(std::string_view name) {
  std::string lower(Trim(name));
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return std::tolower(ch); });
  static const std::map<std::string, DetectorKind, std::less<>> kAliases = {
      {"sd", DetectorKind::kSD},
      {"iqr", DetectorKind::kIQR},
      {"if", DetectorKind::kIsolationForest},
      {"isolationforest", DetectorKind::kIsolationForest},
      {"mv", DetectorKind::kMissingValue},
      {"missingvalue", DetectorKind::kMissingValue},
      {"dm", DetectorKind::kDisguisedMissing},
      {"disguisedmissing", DetectorKind::kDisguisedMissing},
      {"rv", DetectorKind::kRuleViolation},
      {"ruleviolation", DetectorKind::kRuleViolation},
      {"tag", DetectorKind::kUserTag},
      {"usertag", DetectorKind::kUserTag},
      {"ml", DetectorKind::kMLDetector},
      {"mldetector", DetectorKind::kMLDetector},
      {"mink", DetectorKind::kMinK},
  };
  const auto it = kAliases.find(lower);
  if (it == kAliases.end()) {
    Fail(ErrorCode::kUnknownTool, "unknown detection tool '" + std::string(name) + "'");
  }
  return it->second;
}

std::vector<Detection> DetectionReport::ToDetections() const {
  std::vector<Detection> out;
  for (const auto& [cell, kinds] : cells_) {
    for (DetectorKind kind : kinds) out.push_back({cell, kind, ""});
  }
  return out;
}

std::set<CellRef> DetectionReport::CellSet() const {
  std::set<CellRef> out;
  for (const auto& [cell, kinds] : cells_) out.insert(cell);
  return out;
}

DetectionReport Consolidate(const Table& table,
                            std::span<const std::vector<Detection>> reports) {
  DetectionReport report;
  for (const auto& detections : reports) {
    for (const auto& detection : detections) {
      if (!table.Contains(detection.cell)) {
        Fail(ErrorCode::kInvalidArgument,
             "detection at (" + std::to_string(detection.cell.row) + ", " +
                 std::to_string(detection.cell.col) + ") lies outside the table");
      }
      auto& kinds = report.cells_[detection.cell];
      const auto pos = std::lower_bound(kinds.begin(), kinds.end(), detection.detector);
      if (pos != kinds.end() && *pos == detection.detector) continue;
      kinds.insert(pos, detection.detector);
      ++report.counts_[detection.detector];
      ++report.histogram_[table.column(detection.cell.col).name][detection.detector];
    }
  }
  return report;
}

namespace {

void RequireNumeric(const Table& table, std::size_t col) {
  if (col >= table.num_cols()) Fail(ErrorCode::kInvalidArgument, "column out of range");
  if (!table.is_numeric(col)) {
    Fail(ErrorCode::kTypeMismatch,
         "column '" + table.column(col).name + "' is not numeric");
  }
}

}  // namespace

std::vector<Detection> DetectSd(const Table& table, std::size_t col, double k) {
  RequireNumeric(table, col);
  if (!(k > 0.0)) Fail(ErrorCode::kInvalidArgument, "SD multiplier must be positive");
  const std::vector<double> values = table.NumericValues(col);
  std::vector<Detection> out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double squares = 0.0;
  for (double v : values) squares += (v - mean) * (v - mean);
  const double std = std::sqrt(squares / static_cast<double>(values.size()));
  if (std == 0.0) return out;
  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    const auto v = table.numeric(r, col);
    if (v && std::abs(*v - mean) > k * std) {
      out.push_back({{r, col}, DetectorKind::kSD, "more than k std from the mean"});
    }
  }
  return out;
}

std::vector<Detection> DetectIqr(const Table& table, std::size_t col, double multiplier) {
  RequireNumeric(table, col);
  if (!(multiplier >= 0.0)) Fail(ErrorCode::kInvalidArgument, "IQR multiplier must be >= 0");
  std::vector<double> values = table.NumericValues(col);
  std::vector<Detection> out;
  if (values.empty()) return out;
  std::sort(values.begin(), values.end());
  const double q1 = SortedQuantile(values, 0.25);
  const double q3 = SortedQuantile(values, 0.75);
  const double iqr = q3 - q1;
  const double lo = q1 - multiplier * iqr;
  const double hi = q3 + multiplier * iqr;
  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    const auto v = table.numeric(r, col);
    if (v && (*v < lo || *v > hi)) {
      out.push_back({{r, col}, DetectorKind::kIQR, "outside the IQR fences"});
    }
  }
  return out;
}

std::vector<Detection> DetectIsolationForest(const Table& table,
                                             const IsolationForestDetectorConfig& config,
                                             Exec exec) {
  std::vector<std::size_t> numeric_cols;
  for (std::size_t c = 0; c < table.num_cols(); ++c) {
    if (table.is_numeric(c)) numeric_cols.push_back(c);
  }
  if (numeric_cols.empty()) {
    Fail(ErrorCode::kTypeMismatch, "isolation forest needs a numeric column");
  }
  if (table.num_rows() < 2) {
    Fail(ErrorCode::kInvalidArgument, "isolation forest needs at least two rows");
  }
  std::vector<std::size_t> all_rows(table.num_rows());
  for (std::size_t r = 0; r < all_rows.size(); ++r) all_rows[r] = r;
  const auto [x, spec] = Encode(table, numeric_cols, all_rows);
  const std::vector<double> scores = IsolationScores(x, config.forest, exec);
  std::vector<Detection> out;
  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    if (scores[r] < config.threshold) continue;
    for (std::size_t c : numeric_cols) {
      out.push_back({{r, c}, DetectorKind::kIsolationForest, "row anomaly score above threshold"});
    }
  }
  return out;
}

std::vector<Detection> DetectMissing(const Table& table, const MissingTokenSet& missing) {
  std::vector<Detection> out;
  for (std::size_t c = 0; c < table.num_cols(); ++c) {
    for (std::size_t r = 0; r < table.num_rows(); ++r) {
      if (missing.Contains(table.raw(r, c))) {
        out.push_back({{r, c}, DetectorKind::kMissingValue, "missing token"});
      }
    }
  }
  return out;
}

namespace {

std::string Lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return std::tolower(ch); });
  return out;
}

// Extreme values that repeat often and sit far from the rest of the column.
std::vector<double> DisguisedNumericValues(const Table& table, std::size_t col,
                                           const DisguisedMissingConfig& config) {
  std::vector<double> values = table.NumericValues(col);
  std::vector<double> flagged;
  if (values.empty()) return flagged;
  std::sort(values.begin(), values.end());
  const double min_count = std::max(static_cast<double>(config.min_count),
                                    config.min_row_fraction * static_cast<double>(table.num_rows()));
  std::vector<double> candidates = {values.front()};
  if (values.back() != values.front()) candidates.push_back(values.back());
  for (double v : candidates) {
    const auto [first, last] = std::equal_range(values.begin(), values.end(), v);
    const auto count = static_cast<double>(last - first);
    if (count < min_count) continue;
    std::vector<double> rest(values.begin(), first);
    rest.insert(rest.end(), last, values.end());
    if (rest.empty()) continue;
    const double iqr = SortedQuantile(rest, 0.75) - SortedQuantile(rest, 0.25);
    if (iqr <= 0.0) continue;
    const double nearest = v < rest.front() ? rest.front() : rest.back();
    const double gap = std::abs(v - nearest);
    if (gap > config.gap_iqr_multiplier * iqr) flagged.push_back(v);
  }
  return flagged;
}

}  // namespace

std::vector<Detection> DetectDisguised(const Table& table, const DisguisedMissingConfig& config) {
  std::vector<Detection> out;
  std::set<std::string> placeholders;
  for (const auto& p : config.placeholders) placeholders.insert(Lower(p));
  for (std::size_t c = 0; c < table.num_cols(); ++c) {
    if (table.is_numeric(c)) {
      const std::vector<double> sentinels = DisguisedNumericValues(table, c, config);
      if (sentinels.empty()) continue;
      for (std::size_t r = 0; r < table.num_rows(); ++r) {
        const auto v = table.numeric(r, c);
        if (v && std::find(sentinels.begin(), sentinels.end(), *v) != sentinels.end()) {
          out.push_back({{r, c}, DetectorKind::kDisguisedMissing, "frequent isolated extreme"});
        }
      }
    } else {
      for (std::size_t r = 0; r < table.num_rows(); ++r) {
        if (placeholders.count(Lower(Trim(table.raw(r, c)))) != 0) {
          out.push_back({{r, c}, DetectorKind::kDisguisedMissing, "placeholder value"});
        }
      }
    }
  }
  return out;
}

std::vector<Detection> DetectRuleViolations(const Table& table, const RuleSet& rules) {
  std::vector<Detection> out;
  for (const auto& rule : rules.Enforced()) {
    for (const auto& group : ViolatingGroups(table, rule)) {
      for (std::size_t r : group.rows) {
        const std::string& value = table.raw(r, group.dependent_col);
        if (group.mode && value == *group.mode) continue;
        out.push_back({{r, group.dependent_col}, DetectorKind::kRuleViolation,
                       "violates " + rule.key().ToString()});
      }
    }
  }
  return out;
}

std::vector<Detection> DetectTagged(const Table& table, const TagSet& tags) {
  std::vector<Detection> out;
  if (tags.tags.empty()) return out;
  std::set<std::string, std::less<>> trimmed;
  for (const auto& tag : tags.tags) trimmed.emplace(Trim(tag));
  for (std::size_t c = 0; c < table.num_cols(); ++c) {
    for (std::size_t r = 0; r < table.num_rows(); ++r) {
      if (trimmed.count(Trim(table.raw(r, c))) != 0) {
        out.push_back({{r, c}, DetectorKind::kUserTag, "tagged value"});
      }
    }
  }
  return out;
}

std::vector<Detection> MinK(std::span<const std::vector<Detection>> reports, std::size_t k) {
  if (k < 1) Fail(ErrorCode::kInvalidArgument, "Min-K needs K >= 1");
  std::map<CellRef, std::set<DetectorKind>> votes;
  for (const auto& detections : reports) {
    for (const auto& d : detections) votes[d.cell].insert(d.detector);
  }
  std::vector<Detection> out;
  for (const auto& [cell, kinds] : votes) {
    if (kinds.size() >= k) {
      out.push_back({cell, DetectorKind::kMinK,
                     "flagged by " + std::to_string(kinds.size()) + " detectors"});
    }
  }
  return out;
}

DetectorOutputs RunDetectors(const Table& table, const DetectorSuiteConfig& config,
                             const RuleSet& rules, Exec exec) {
  std::vector<DetectorKind> kinds;
  for (DetectorKind kind : config.tools) {
    if (kind == DetectorKind::kMLDetector || kind == DetectorKind::kMinK) continue;
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) kinds.push_back(kind);
  }
  std::vector<std::vector<Detection>> results(kinds.size());
  // Inner kernels run serially when the detectors themselves are spread
  // across threads.
  const Exec inner = exec == Exec::kParallel && kinds.size() > 1 ? Exec::kSerial : exec;
  ForEachIndex(exec, kinds.size(), [&](std::size_t i) {
    std::vector<Detection>& out = results[i];
    switch (kinds[i]) {
      case DetectorKind::kSD:
        for (std::size_t c = 0; c < table.num_cols(); ++c) {
          if (!table.is_numeric(c)) continue;
          auto found = DetectSd(table, c, config.sd_k);
          out.insert(out.end(), found.begin(), found.end());
        }
        break;
      case DetectorKind::kIQR:
        for (std::size_t c = 0; c < table.num_cols(); ++c) {
          if (!table.is_numeric(c)) continue;
          auto found = DetectIqr(table, c, config.iqr_multiplier);
          out.insert(out.end(), found.begin(), found.end());
        }
        break;
      case DetectorKind::kIsolationForest: {
        bool any_numeric = false;
        for (std::size_t c = 0; c < table.num_cols(); ++c) any_numeric |= table.is_numeric(c);
        if (any_numeric && table.num_rows() >= 2) {
          out = DetectIsolationForest(table, config.isolation_forest, inner);
        }
        break;
      }
      case DetectorKind::kMissingValue:
        out = DetectMissing(table, table.missing_tokens());
        break;
      case DetectorKind::kDisguisedMissing:
        out = DetectDisguised(table, config.disguised);
        break;
      case DetectorKind::kRuleViolation:
        out = DetectRuleViolations(table, rules);
        break;
      case DetectorKind::kUserTag:
        out = DetectTagged(table, config.tags);
        break;
      case DetectorKind::kMLDetector:
      case DetectorKind::kMinK:
        break;
    }
  });
  DetectorOutputs outputs;
  for (std::size_t i = 0; i < kinds.size(); ++i) outputs[kinds[i]] = std::move(results[i]);
  return outputs;
}

DetectionReport BuildReport(const Table& table, const DetectorOutputs& outputs,
                            std::optional<std::size_t> min_k) {
  std::vector<std::vector<Detection>> lists;
  for (const auto& [kind, detections] : outputs) lists.push_back(detections);
  if (!min_k) return Consolidate(table, lists);
  std::vector<Detection> survivors = MinK(lists, *min_k);
  std::set<CellRef> keep;
  for (const auto& d : survivors) keep.insert(d.cell);
  std::vector<std::vector<Detection>> filtered;
  for (const auto& detections : lists) {
    std::vector<Detection> kept;
    for (const auto& d : detections) {
      if (keep.count(d.cell) != 0) kept.push_back(d);
    }
    filtered.push_back(std::move(kept));
  }
  filtered.push_back(std::move(survivors));
  return Consolidate(table, filtered);
}

void to_json(json& j, const DetectionReport& report) {
  json detections = json::array();
  for (const auto& [cell, kinds] : report.cells()) {
    json names = json::array();
    for (DetectorKind kind : kinds) names.push_back(DetectorName(kind));
    detections.push_back(json{{"row", cell.row}, {"col", cell.col}, {"detectors", names}});
  }
  json counts = json::object();
  for (const auto& [kind, count] : report.per_detector_counts()) {
    counts[std::string(DetectorName(kind))] = count;
  }
  json histogram = json::object();
  for (const auto& [column, per_kind] : report.histogram()) {
    json entry = json::object();
    for (const auto& [kind, count] : per_kind) entry[std::string(DetectorName(kind))] = count;
    histogram[column] = std::move(entry);
  }
  j = json{{"detections", detections},
           {"per_detector_counts", counts},
           {"histogram", histogram},
           {"num_detected_cells", report.size()}};
}

void from_json(const json& j, DetectionReport& report) {
  report = DetectionReport();
  for (const auto& entry : j.at("detections")) {
    const CellRef cell{entry.at("row").get<std::size_t>(), entry.at("col").get<std::size_t>()};
    auto& kinds = report.cells_[cell];
    for (const auto& name : entry.at("detectors")) {
      kinds.push_back(ParseDetectorKind(name.get<std::string>()));
    }
    std::sort(kinds.begin(), kinds.end());
  }
  for (const auto& [name, count] : j.at("per_detector_counts").items()) {
    report.counts_[ParseDetectorKind(name)] = count.get<std::size_t>();
  }
  for (const auto& [column, per_kind] : j.at("histogram").items()) {
    for (const auto& [name, count] : per_kind.items()) {
      report.histogram_[column][ParseDetectorKind(name)] = count.get<std::size_t>();
    }
  }
}

json DetectorConfigJson(const DetectorSuiteConfig& config, DetectorKind kind) {
  switch (kind) {
    case DetectorKind::kSD: return json{{"k", config.sd_k}};
    case DetectorKind::kIQR: return json{{"multiplier", config.iqr_multiplier}};
    case DetectorKind::kIsolationForest:
      return json{{"threshold", config.isolation_forest.threshold},
                  {"n_trees", config.isolation_forest.forest.n_trees},
                  {"subsample", config.isolation_forest.forest.subsample},
                  {"seed", config.isolation_forest.forest.seed}};
    case DetectorKind::kDisguisedMissing:
      return json{{"min_count", config.disguised.min_count},
                  {"min_row_fraction", config.disguised.min_row_fraction},
                  {"gap_iqr_multiplier", config.disguised.gap_iqr_multiplier},
                  {"placeholders", config.disguised.placeholders}};
    case DetectorKind::kUserTag: return json{{"tags", config.tags.tags}};
    case DetectorKind::kMinK:
      return json{{"k", config.min_k ? json(*config.min_k) : json(nullptr)}};
    default: return json::object();
  }
}

void to_json(json& j, const DetectorSuiteConfig& config) {
  json tools = json::array();
  for (DetectorKind kind : config.tools) tools.push_back(DetectorName(kind));
  j = json{{"tools", tools},
           {"sd", DetectorConfigJson(config, DetectorKind::kSD)},
           {"iqr", DetectorConfigJson(config, DetectorKind::kIQR)},
           {"isolation_forest", DetectorConfigJson(config, DetectorKind::kIsolationForest)},
           {"disguised", DetectorConfigJson(config, DetectorKind::kDisguisedMissing)},
           {"tags", config.tags.tags},
           {"min_k", config.min_k ? json(*config.min_k) : json(nullptr)}};
}

void from_json(const json& j, DetectorSuiteConfig& config) {
  config = DetectorSuiteConfig();
  for (const auto& name : j.value("tools", json::array())) {
    config.tools.push_back(ParseDetectorKind(name.get<std::string>()));
  }
  if (j.contains("sd")) config.sd_k = j["sd"].value("k", config.sd_k);
  if (j.contains("iqr")) config.iqr_multiplier = j["iqr"].value("multiplier", config.iqr_multiplier);
  if (j.contains("isolation_forest")) {
    const json& f = j["isolation_forest"];
    config.isolation_forest.threshold = f.value("threshold", config.isolation_forest.threshold);
    config.isolation_forest.forest.n_trees = f.value("n_trees", config.isolation_forest.forest.n_trees);
    config.isolation_forest.forest.subsample =
        f.value("subsample", config.isolation_forest.forest.subsample);
    config.isolation_forest.forest.seed = f.value("seed", config.isolation_forest.forest.seed);
  }
  if (j.contains("disguised")) {
    const json& d = j["disguised"];
    config.disguised.min_count = d.value("min_count", config.disguised.min_count);
    config.disguised.min_row_fraction = d.value("min_row_fraction", config.disguised.min_row_fraction);
    config.disguised.gap_iqr_multiplier =
        d.value("gap_iqr_multiplier", config.disguised.gap_iqr_multiplier);
    if (d.contains("placeholders")) {
      config.disguised.placeholders = d["placeholders"].get<std::set<std::string>>();
    }
  }
  if (j.contains("tags")) config.tags.tags = j["tags"].get<std::set<std::string>>();
  if (j.contains("min_k") && !j["min_k"].is_null()) config.min_k = j["min_k"].get<std::size_t>();
}

}  // namespace lens
