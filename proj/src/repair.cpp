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

#include "lens/repair.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "lens/error.hpp"
#include "lens/io.hpp"

namespace lens {

using nlohmann::json;

std::string_view RepairKindName(RepairKind kind) {
  return kind == RepairKind::kStandard ? "StandardImputer" : "MLImputer";
}

RepairKind ParseRepairKind(std::string_view name) {
  std::string lower(Trim(name));
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return std::tolower(ch); });
  if (lower == "standard" || lower == "standardimputer") return RepairKind::kStandard;
  if (lower == "ml" || lower == "mlimputer") return RepairKind::kMl;
  Fail(ErrorCode::kUnknownTool, "unknown repair tool '" + std::string(name) + "'");
}

namespace {

// Detected rows per column, in row order.
std::map<std::size_t, std::vector<std::size_t>> DetectedByColumn(
    const Table& table, const DetectionReport& detections) {
  std::map<std::size_t, std::vector<std::size_t>> out;
  for (const auto& [cell, kinds] : detections.cells()) {
    if (!table.Contains(cell)) {
      Fail(ErrorCode::kInvalidArgument, "detection outside the table");
    }
    out[cell.col].push_back(cell.row);
  }
  return out;
}

std::string StandardValue(const Table& table, std::size_t col,
                          const std::vector<std::size_t>& detected_rows) {
  if (!table.is_numeric(col)) return std::string(kDummyValue);
  std::vector<char> detected(table.num_rows(), 0);
  for (std::size_t r : detected_rows) detected[r] = 1;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    if (detected[r]) continue;
    if (auto v = table.numeric(r, col)) {
      sum += *v;
      ++count;
    }
  }
  if (count == 0) return "0.0";
  return FormatDecimal(sum / static_cast<double>(count));
}

}  // namespace

RepairResult RepairStandard(const Table& table, const DetectionReport& detections) {
  const auto by_column = DetectedByColumn(table, detections);
  std::vector<std::string> cells = table.cells();
  RepairResult result;
  for (const auto& [col, rows] : by_column) {
    const std::string value = StandardValue(table, col, rows);
    const std::string method = table.is_numeric(col) ? "mean" : "dummy";
    for (std::size_t r : rows) {
      result.changes.push_back({{r, col}, table.raw(r, col), value, method});
      cells[r * table.num_cols() + col] = value;
    }
  }
  std::sort(result.changes.begin(), result.changes.end(),
            [](const CellChange& a, const CellChange& b) { return a.cell < b.cell; });
  result.repaired = table.WithCells(std::move(cells));
  return result;
}

RepairResult RepairMl(const Table& table, const DetectionReport& detections,
                      const MlRepairConfig& config, Exec exec) {
  const auto by_column = DetectedByColumn(table, detections);
  const RepairResult prefill = RepairStandard(table, detections);
  const Table& features = prefill.repaired;
  std::vector<std::string> cells = table.cells();
  RepairResult result;
  for (const auto& [col, rows] : by_column) {
    std::vector<char> detected(table.num_rows(), 0);
    for (std::size_t r : rows) detected[r] = 1;
    const bool numeric = table.is_numeric(col);
    std::vector<std::size_t> train_rows;
    for (std::size_t r = 0; r < table.num_rows(); ++r) {
      if (detected[r] || table.is_missing(r, col)) continue;
      if (numeric && !table.numeric(r, col)) continue;
      train_rows.push_back(r);
    }
    std::vector<std::size_t> feature_cols;
    for (std::size_t c = 0; c < table.num_cols(); ++c) {
      if (c != col) feature_cols.push_back(c);
    }
    std::vector<std::string> repaired_values;
    std::string method;
    if (train_rows.empty() || feature_cols.empty()) {
      const std::string value = features.raw(rows.front(), col);
      repaired_values.assign(rows.size(), value);
      method = numeric ? "mean" : "dummy";
    } else {
      const auto [x_all, spec] = Encode(features, feature_cols, train_rows);
      const Matrix x_train = x_all.SelectRows(train_rows);
      const Matrix x_query = x_all.SelectRows(rows);
      if (numeric) {
        std::vector<double> y;
        y.reserve(train_rows.size());
        for (std::size_t r : train_rows) y.push_back(*table.numeric(r, col));
        const DecisionTreeModel tree =
            FitTree(x_train, y, TreeTask::kRegression, config.tree, config.seed + col);
        for (double v : tree.Predict(x_query)) repaired_values.push_back(FormatDecimal(v));
        method = "decision_tree";
      } else {
        std::vector<std::string> classes;
        std::map<std::string, int> codes;
        std::vector<int> labels;
        for (std::size_t r : train_rows) {
          auto [it, inserted] = codes.emplace(table.raw(r, col), static_cast<int>(classes.size()));
          if (inserted) classes.push_back(table.raw(r, col));
          labels.push_back(it->second);
        }
        const KnnModel knn =
            FitKnn(x_train, std::move(labels), spec.CategoricalMask(), config.knn_k);
        for (int code : PredictKnn(knn, x_query, exec)) {
          repaired_values.push_back(classes[static_cast<std::size_t>(code)]);
        }
        method = "knn";
      }
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::size_t r = rows[i];
      result.changes.push_back({{r, col}, table.raw(r, col), repaired_values[i], method});
      cells[r * table.num_cols() + col] = repaired_values[i];
    }
  }
  std::sort(result.changes.begin(), result.changes.end(),
            [](const CellChange& a, const CellChange& b) { return a.cell < b.cell; });
  result.repaired = table.WithCells(std::move(cells));
  return result;
}

RepairResult Repair(const Table& table, const DetectionReport& detections, RepairKind kind,
                    const MlRepairConfig& config, Exec exec) {
  return kind == RepairKind::kStandard ? RepairStandard(table, detections)
                                       : RepairMl(table, detections, config, exec);
}

VersionId ApplyAndCommit(VersionStore& store, const std::string& dataset,
                         RepairResult& result, const std::string& note) {
  const VersionId version =
      store.Commit(dataset, result.repaired, CommitOperation::kRepair, note);
  WriteFileAtomic(store.DatasetDir(dataset) / "repaired.csv", ToCsv(result.repaired));
  result.version_after = version;
  return version;
}

void to_json(json& j, const MlRepairConfig& config) {
  j = json{{"knn_k", config.knn_k},
           {"max_depth", config.tree.max_depth},
           {"min_samples_leaf", config.tree.min_samples_leaf},
           {"seed", config.seed}};
}

void from_json(const json& j, MlRepairConfig& config) {
  config = MlRepairConfig();
  config.knn_k = j.value("knn_k", config.knn_k);
  config.tree.max_depth = j.value("max_depth", config.tree.max_depth);
  config.tree.min_samples_leaf = j.value("min_samples_leaf", config.tree.min_samples_leaf);
  config.seed = j.value("seed", config.seed);
}

void to_json(json& j, const CellChange& change) {
  j = json{{"row", change.cell.row},
           {"col", change.cell.col},
           {"old", change.old_value},
           {"new", change.new_value},
           {"method", change.method}};
}

}  // namespace lens
