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

#ifndef LENS_PROFILER_HPP_
#define LENS_PROFILER_HPP_

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lens/parallel.hpp"
#include "lens/table.hpp"

namespace lens {

class DetectionReport;
struct RuleSet;

// Type-7 quantile: linear interpolation at position q * (n - 1) of the sorted
// values. Throws kInvalidArgument on empty input or q outside [0, 1].
double Quantile(std::span<const double> values, double q);

// Same, for values that are already sorted ascending.
double SortedQuantile(std::span<const double> sorted, double q);

struct NumericSummary {
  double mean = 0.0;
  double std = 0.0;  // population
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

inline constexpr std::size_t kTopK = 10;

struct ColumnProfile {
  std::string name;
  ColumnType type = ColumnType::kCategorical;
  std::size_t count = 0;
  std::size_t missing_count = 0;
  std::size_t distinct_count = 0;
  // Numeric columns with at least one parsed value.
  std::optional<NumericSummary> numeric;
  // Categorical columns: most frequent values, ties by value ascending.
  std::vector<std::pair<std::string, std::size_t>> top_k;
};

struct ProfileReport {
  std::vector<ColumnProfile> columns;
  // Indices (into the table) of the Numeric columns the matrix covers.
  std::vector<std::size_t> numeric_columns;
  // Pearson coefficients with pairwise deletion; absent where undefined.
  std::vector<std::vector<std::optional<double>>> correlations;
  std::size_t duplicate_row_count = 0;
  std::string generated_at;
};

ProfileReport Profile(const Table& table, Exec exec = Exec::kParallel);

// Pearson correlation over pairs where both entries are present; nullopt
// when fewer than two pairs remain or either side is constant.
std::optional<double> Pearson(std::span<const std::optional<double>> x,
                              std::span<const std::optional<double>> y);

std::size_t DuplicateRowCount(const Table& table);

struct QualityMetrics {
  double completeness = 1.0;
  double error_rate = 0.0;
  double duplicate_row_rate = 0.0;
  double rule_violation_rate = 0.0;
};

// Throws kInvalidArgument when a detection lies outside the table.
QualityMetrics ComputeQualityMetrics(const Table& table,
                                     const DetectionReport& detections,
                                     const RuleSet& rules);

void to_json(nlohmann::json& j, const ColumnProfile& profile);
void to_json(nlohmann::json& j, const ProfileReport& report);
void to_json(nlohmann::json& j, const QualityMetrics& metrics);
void from_json(const nlohmann::json& j, QualityMetrics& metrics);

}  // namespace lens

#endif  // LENS_PROFILER_HPP_
