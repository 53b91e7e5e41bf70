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

#ifndef LENS_TABLE_HPP_
#define LENS_TABLE_HPP_

#include <cstddef>
#include <compare>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lens {

enum class ColumnType { kNumeric, kCategorical };

std::string_view ColumnTypeName(ColumnType type);

// Share of non-missing values that must parse as finite decimals for a column
// to be typed Numeric.
inline constexpr double kNumericShare = 0.95;

// Tokens that denote a missing cell. Membership is exact equality after
// trimming surrounding whitespace from the candidate.
class MissingTokenSet {
 public:
  MissingTokenSet();
  explicit MissingTokenSet(std::set<std::string> tokens);

  bool Contains(std::string_view raw) const;
  const std::set<std::string, std::less<>>& tokens() const { return tokens_; }

 private:
  std::set<std::string, std::less<>> tokens_;
};

struct CellRef {
  std::size_t row = 0;
  std::size_t col = 0;

  auto operator<=>(const CellRef&) const = default;
};

struct Column {
  std::string name;
  ColumnType type = ColumnType::kCategorical;
};

std::string_view Trim(std::string_view text);

// Parses a finite decimal after trimming whitespace; nullopt otherwise.
std::optional<double> ParseDecimal(std::string_view raw);

// Shortest text that round-trips to the same double.
std::string FormatDecimal(double value);

ColumnType InferColumnType(std::span<const std::string> values,
                           const MissingTokenSet& missing);

// Immutable rectangular snapshot of a dataset. Raw strings are the source of
// truth; the numeric cache is derived from them for Numeric columns.
class Table {
 public:
  Table() = default;

  // Infers column types. Throws kInvalidArgument on ragged grids and on empty
  // or duplicate column names.
  static Table FromGrid(std::string name, std::vector<std::string> headers,
                        std::vector<std::vector<std::string>> rows,
                        MissingTokenSet missing = {});

  // Same schema (including column types), new cell contents.
  Table WithCells(std::vector<std::string> cells) const;

  const std::string& name() const { return name_; }
  std::size_t num_rows() const { return num_rows_; }
  std::size_t num_cols() const { return columns_.size(); }
  std::size_t num_cells() const { return cells_.size(); }
  const std::vector<Column>& columns() const { return columns_; }
  const Column& column(std::size_t col) const { return columns_.at(col); }
  bool is_numeric(std::size_t col) const {
    return columns_.at(col).type == ColumnType::kNumeric;
  }
  const MissingTokenSet& missing_tokens() const { return missing_; }

  // Index of the named column; throws kNotFound.
  std::size_t ColumnIndex(std::string_view column_name) const;
  std::optional<std::size_t> FindColumn(std::string_view column_name) const;

  const std::string& raw(std::size_t row, std::size_t col) const {
    return cells_[row * columns_.size() + col];
  }
  const std::string& raw(CellRef cell) const { return raw(cell.row, cell.col); }

  // Parsed value of a Numeric cell; nullopt for missing or unparseable cells
  // and for every cell of a Categorical column.
  std::optional<double> numeric(std::size_t row, std::size_t col) const {
    return numeric_[row * columns_.size() + col];
  }

  bool is_missing(std::size_t row, std::size_t col) const {
    return missing_mask_[row * columns_.size() + col] != 0;
  }

  bool Contains(CellRef cell) const {
    return cell.row < num_rows_ && cell.col < columns_.size();
  }

  // Non-missing parsed values of a Numeric column in row order.
  std::vector<double> NumericValues(std::size_t col) const;

  std::vector<std::string> ColumnValues(std::size_t col) const;

  const std::vector<std::string>& cells() const { return cells_; }

  bool SameGrid(const Table& other) const;

 private:
  void BuildCaches();

  std::string name_;
  std::vector<Column> columns_;
  std::vector<std::string> cells_;
  std::vector<std::optional<double>> numeric_;
  std::vector<char> missing_mask_;
  std::size_t num_rows_ = 0;
  MissingTokenSet missing_;
};

// RFC-4180 CSV with a mandatory header row.
Table ParseCsv(std::string_view bytes, std::string name = "",
               const MissingTokenSet& missing = {});

// Canonical CSV: quoting only when a value holds a comma, quote, CR or LF;
// "\n" line endings; raw values verbatim.
std::string ToCsv(const Table& table);

}  // namespace lens

#endif  // LENS_TABLE_HPP_
