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

#include "lens/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_set>

#include "lens/detectors.hpp"
#include "lens/error.hpp"
#include "lens/io.hpp"
#include "lens/rules.hpp"

namespace lens {

using nlohmann::json;

double SortedQuantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) Fail(ErrorCode::kInvalidArgument, "quantile of empty input");
  if (!(q >= 0.0 && q <= 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "quantile fraction outside [0, 1]");
  }
  const double position = q * static_cast<double>(sorted.size() - 1);
  const auto lower = static_cast<std::size_t>(std::floor(position));
  const double fraction = position - static_cast<double>(lower);
  if (lower + 1 >= sorted.size() || fraction == 0.0) return sorted[lower];
  return sorted[lower] + fraction * (sorted[lower + 1] - sorted[lower]);
}

double Quantile(std::span<const double> values, double q) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return SortedQuantile(sorted, q);
}

std::optional<double> Pearson(std::span<const std::optional<double>> x,
                              std::span<const std::optional<double>> y) {
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (x[i] && y[i]) pairs.emplace_back(*x[i], *y[i]);
  }
  if (pairs.size() < 2) return std::nullopt;
  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& [a, b] : pairs) {
    mean_x += a;
    mean_y += b;
  }
  mean_x /= static_cast<double>(pairs.size());
  mean_y /= static_cast<double>(pairs.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (const auto& [a, b] : pairs) {
    sxy += (a - mean_x) * (b - mean_y);
    sxx += (a - mean_x) * (a - mean_x);
    syy += (b - mean_y) * (b - mean_y);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

std::size_t DuplicateRowCount(const Table& table) {
  std::set<std::vector<std::string>> distinct;
  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    std::vector<std::string> row;
    row.reserve(table.num_cols());
    for (std::size_t c = 0; c < table.num_cols(); ++c) row.push_back(table.raw(r, c));
    distinct.insert(std::move(row));
  }
  return table.num_rows() - distinct.size();
}

namespace {

ColumnProfile ProfileColumn(const Table& table, std::size_t col) {
  ColumnProfile profile;
  profile.name = table.column(col).name;
  profile.type = table.column(col).type;
  profile.count = table.num_rows();
  std::map<std::string, std::size_t> frequency;
  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    if (table.is_missing(r, col)) {
      ++profile.missing_count;
      continue;
    }
    ++frequency[table.raw(r, col)];
  }
  profile.distinct_count = frequency.size();
  if (profile.type == ColumnType::kNumeric) {
    std::vector<double> values = table.NumericValues(col);
    if (!values.empty()) {
      std::sort(values.begin(), values.end());
      NumericSummary summary;
      double sum = 0.0;
      for (double v : values) sum += v;
      summary.mean = sum / static_cast<double>(values.size());
      double squares = 0.0;
      for (double v : values) squares += (v - summary.mean) * (v - summary.mean);
      summary.std = std::sqrt(squares / static_cast<double>(values.size()));
      summary.min = values.front();
      summary.q1 = SortedQuantile(values, 0.25);
      summary.median = SortedQuantile(values, 0.5);
      summary.q3 = SortedQuantile(values, 0.75);
      summary.max = values.back();
      profile.numeric = summary;
    }
  } else {
    std::vector<std::pair<std::string, std::size_t>> ranked(frequency.begin(),
                                                            frequency.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > kTopK) ranked.resize(kTopK);
    profile.top_k = std::move(ranked);
  }
  return profile;
}

}  // namespace

ProfileReport Profile(const Table& table, Exec exec) {
  ProfileReport report;
  report.columns.resize(table.num_cols());
  ForEachIndex(exec, table.num_cols(), [&](std::size_t col) {
    report.columns[col] = ProfileColumn(table, col);
  });

  for (std::size_t c = 0; c < table.num_cols(); ++c) {
    if (table.is_numeric(c)) report.numeric_columns.push_back(c);
  }
  const std::size_t m = report.numeric_columns.size();
  std::vector<std::vector<std::optional<double>>> series(m);
  for (std::size_t i = 0; i < m; ++i) {
    series[i].reserve(table.num_rows());
    for (std::size_t r = 0; r < table.num_rows(); ++r) {
      series[i].push_back(table.numeric(r, report.numeric_columns[i]));
    }
  }
  report.correlations.assign(m, std::vector<std::optional<double>>(m));
  ForEachIndex(exec, m, [&](std::size_t i) {
    for (std::size_t j = i; j < m; ++j) {
      std::optional<double> r = Pearson(series[i], series[j]);
      if (i == j && r) r = 1.0;
      report.correlations[i][j] = r;
    }
  });
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      report.correlations[i][j] = report.correlations[j][i];
    }
  }
  report.duplicate_row_count = DuplicateRowCount(table);
  report.generated_at = UtcNow();
  return report;
}

QualityMetrics ComputeQualityMetrics(const Table& table,
                                     const DetectionReport& detections,
                                     const RuleSet& rules) {
  for (const auto& [cell, kinds] : detections.cells()) {
    if (!table.Contains(cell)) {
      Fail(ErrorCode::kInvalidArgument, "detection outside the table");
    }
  }
  QualityMetrics metrics;
  const double cells = static_cast<double>(table.num_cells());
  const double rows = static_cast<double>(table.num_rows());
  if (table.num_cells() == 0) return metrics;
  std::size_t missing = 0;
  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    for (std::size_t c = 0; c < table.num_cols(); ++c) {
      if (table.is_missing(r, c)) ++missing;
    }
  }
  metrics.completeness = 1.0 - static_cast<double>(missing) / cells;
  metrics.error_rate = static_cast<double>(detections.size()) / cells;
  metrics.duplicate_row_rate =
      static_cast<double>(DuplicateRowCount(table)) / rows;
  std::unordered_set<std::size_t> violating_rows;
  for (const auto& rule : rules.Enforced()) {
    bool known = true;
    for (const auto& name : rule.determinants) known &= table.FindColumn(name).has_value();
    for (const auto& name : rule.dependents) known &= table.FindColumn(name).has_value();
    if (!known) continue;
    for (const auto& group : ViolatingGroups(table, rule)) {
      violating_rows.insert(group.rows.begin(), group.rows.end());
    }
  }
  metrics.rule_violation_rate = static_cast<double>(violating_rows.size()) / rows;
  return metrics;
}

void to_json(json& j, const ColumnProfile& profile) {
  j = json{{"name", profile.name},
           {"type", ColumnTypeName(profile.type)},
           {"count", profile.count},
           {"missing_count", profile.missing_count},
           {"distinct_count", profile.distinct_count}};
  if (profile.type == ColumnType::kNumeric) {
    if (profile.numeric) {
      const auto& s = *profile.numeric;
      j["numeric"] = json{{"mean", s.mean}, {"std", s.std},       {"min", s.min},
                          {"q1", s.q1},     {"median", s.median}, {"q3", s.q3},
                          {"max", s.max}};
    } else {
      j["numeric"] = nullptr;
    }
  } else {
    json top = json::array();
    for (const auto& [value, frequency] : profile.top_k) {
      top.push_back(json{{"value", value}, {"frequency", frequency}});
    }
    j["top_k"] = std::move(top);
  }
}

void to_json(json& j, const ProfileReport& report) {
  json names = json::array();
  for (std::size_t c : report.numeric_columns) names.push_back(report.columns[c].name);
  json matrix = json::array();
  for (const auto& row : report.correlations) {
    json entries = json::array();
    for (const auto& value : row) entries.push_back(value ? json(*value) : json(nullptr));
    matrix.push_back(std::move(entries));
  }
  j = json{{"columns", report.columns},
           {"correlations", json{{"columns", names}, {"matrix", matrix}}},
           {"duplicate_row_count", report.duplicate_row_count},
           {"generated_at", report.generated_at}};
}

void to_json(json& j, const QualityMetrics& metrics) {
  j = json{{"completeness", metrics.completeness},
           {"error_rate", metrics.error_rate},
           {"duplicate_row_rate", metrics.duplicate_row_rate},
           {"rule_violation_rate", metrics.rule_violation_rate}};
}

void from_json(const json& j, QualityMetrics& metrics) {
  metrics.completeness = j.at("completeness").get<double>();
  metrics.error_rate = j.at("error_rate").get<double>();
  metrics.duplicate_row_rate = j.at("duplicate_row_rate").get<double>();
  metrics.rule_violation_rate = j.at("rule_violation_rate").get<double>();
}

}  // namespace lens
