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

#include "lens/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_set>

#include "lens/error.hpp"

namespace lens {

std::string_view ColumnTypeName(ColumnType type) {
  return type == ColumnType::kNumeric ? "Numeric" : "Categorical";
}

MissingTokenSet::MissingTokenSet()
    : tokens_{"", "NA", "N/A", "na", "NaN", "nan", "null", "NULL", "?", "-"} {}

MissingTokenSet::MissingTokenSet(std::set<std::string> tokens)
    : tokens_(tokens.begin(), tokens.end()) {}

bool MissingTokenSet::Contains(std::string_view raw) const {
  return tokens_.find(Trim(raw)) != tokens_.end();
}

std::string_view Trim(std::string_view text) {
  constexpr std::string_view kSpace = " \t\r\n\v\f";
  const auto first = text.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(kSpace);
  return text.substr(first, last - first + 1);
}

std::optional<double> ParseDecimal(std::string_view raw) {
  std::string_view text = Trim(raw);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') {
    text.remove_prefix(1);
    if (text.empty() || text.front() == '+' || text.front() == '-') {
      return std::nullopt;
    }
  }
  double value = 0.0;
  const auto [end, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value,
                      std::chars_format::general);
  if (ec != std::errc() || end != text.data() + text.size()) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

std::string FormatDecimal(double value) {
  if (value == 0.0) value = 0.0;  // folds -0 into 0
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, end);
}

ColumnType InferColumnType(std::span<const std::string> values,
                           const MissingTokenSet& missing) {
  std::size_t present = 0;
  std::size_t numeric = 0;
  for (const auto& value : values) {
    if (missing.Contains(value)) continue;
    ++present;
    if (ParseDecimal(value)) ++numeric;
  }
  if (present == 0) return ColumnType::kCategorical;
  return static_cast<double>(numeric) >=
                 kNumericShare * static_cast<double>(present)
             ? ColumnType::kNumeric
             : ColumnType::kCategorical;
}

Table Table::FromGrid(std::string name, std::vector<std::string> headers,
                      std::vector<std::vector<std::string>> rows,
                      MissingTokenSet missing) {
  Table table;
  table.name_ = std::move(name);
  table.missing_ = std::move(missing);
  std::unordered_set<std::string> seen;
  for (auto& header : headers) {
    if (header.empty()) Fail(ErrorCode::kParse, "empty column name");
    if (!seen.insert(header).second) {
      Fail(ErrorCode::kParse, "duplicate column name '" + header + "'");
    }
    table.columns_.push_back({std::move(header), ColumnType::kCategorical});
  }
  const std::size_t width = table.columns_.size();
  table.num_rows_ = rows.size();
  table.cells_.reserve(width * rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != width) {
      Fail(ErrorCode::kParse, "ragged row " + std::to_string(r + 1) +
                                  ": expected " + std::to_string(width) +
                                  " fields, got " +
                                  std::to_string(rows[r].size()));
    }
    for (auto& cell : rows[r]) table.cells_.push_back(std::move(cell));
  }
  for (std::size_t c = 0; c < width; ++c) {
    table.columns_[c].type =
        InferColumnType(table.ColumnValues(c), table.missing_);
  }
  table.BuildCaches();
  return table;
}

Table Table::WithCells(std::vector<std::string> cells) const {
  if (cells.size() != cells_.size()) {
    Fail(ErrorCode::kInvalidArgument, "cell grid size mismatch");
  }
  Table table;
  table.name_ = name_;
  table.columns_ = columns_;
  table.num_rows_ = num_rows_;
  table.missing_ = missing_;
  table.cells_ = std::move(cells);
  table.BuildCaches();
  return table;
}

void Table::BuildCaches() {
  const std::size_t width = columns_.size();
  numeric_.assign(cells_.size(), std::nullopt);
  missing_mask_.assign(cells_.size(), 0);
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const bool missing = missing_.Contains(cells_[i]);
    missing_mask_[i] = missing ? 1 : 0;
    if (!missing && columns_[i % width].type == ColumnType::kNumeric) {
      numeric_[i] = ParseDecimal(cells_[i]);
    }
  }
}

std::size_t Table::ColumnIndex(std::string_view column_name) const {
  if (auto index = FindColumn(column_name)) return *index;
  Fail(ErrorCode::kNotFound, "unknown column '" + std::string(column_name) + "'");
}

std::optional<std::size_t> Table::FindColumn(std::string_view column_name) const {
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (columns_[c].name == column_name) return c;
  }
  return std::nullopt;
}

std::vector<double> Table::NumericValues(std::size_t col) const {
  std::vector<double> values;
  values.reserve(num_rows_);
  for (std::size_t r = 0; r < num_rows_; ++r) {
    if (auto v = numeric(r, col)) values.push_back(*v);
  }
  return values;
}

std::vector<std::string> Table::ColumnValues(std::size_t col) const {
  std::vector<std::string> values;
  values.reserve(num_rows_);
  for (std::size_t r = 0; r < num_rows_; ++r) values.push_back(raw(r, col));
  return values;
}

bool Table::SameGrid(const Table& other) const {
  if (columns_.size() != other.columns_.size()) return false;
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (columns_[c].name != other.columns_[c].name) return false;
  }
  return cells_ == other.cells_;
}

namespace {

// Reads one record starting at pos. Returns false at end of input.
bool ReadRecord(std::string_view bytes, std::size_t& pos,
                std::vector<std::string>& fields, std::size_t line) {
  fields.clear();
  if (pos >= bytes.size()) return false;
  std::string field;
  while (true) {
    field.clear();
    if (pos < bytes.size() && bytes[pos] == '"') {
      ++pos;
      while (true) {
        if (pos >= bytes.size()) {
          Fail(ErrorCode::kParse,
               "unterminated quoted field on line " + std::to_string(line));
        }
        const char ch = bytes[pos++];
        if (ch == '"') {
          if (pos < bytes.size() && bytes[pos] == '"') {
            field.push_back('"');
            ++pos;
          } else {
            break;
          }
        } else {
          field.push_back(ch);
        }
      }
      if (pos < bytes.size() && bytes[pos] != ',' && bytes[pos] != '\n' &&
          bytes[pos] != '\r') {
        Fail(ErrorCode::kParse,
             "unexpected character after closing quote on line " +
                 std::to_string(line));
      }
    } else {
      while (pos < bytes.size() && bytes[pos] != ',' && bytes[pos] != '\n' &&
             bytes[pos] != '\r') {
        if (bytes[pos] == '"') {
          Fail(ErrorCode::kParse,
               "stray quote in unquoted field on line " + std::to_string(line));
        }
        field.push_back(bytes[pos++]);
      }
    }
    fields.push_back(field);
    if (pos >= bytes.size()) return true;
    const char sep = bytes[pos++];
    if (sep == ',') continue;
    if (sep == '\r' && pos < bytes.size() && bytes[pos] == '\n') ++pos;
    return true;
  }
}

}  // namespace

Table ParseCsv(std::string_view bytes, std::string name,
               const MissingTokenSet& missing) {
  if (bytes.starts_with("\xEF\xBB\xBF")) bytes.remove_prefix(3);
  if (bytes.empty()) Fail(ErrorCode::kParse, "empty input");
  std::size_t pos = 0;
  std::vector<std::string> headers;
  ReadRecord(bytes, pos, headers, 1);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> fields;
  std::size_t line = 2;
  while (ReadRecord(bytes, pos, fields, line)) {
    if (fields.size() != headers.size()) {
      Fail(ErrorCode::kParse, "ragged row " + std::to_string(rows.size() + 1) +
                                  ": expected " +
                                  std::to_string(headers.size()) +
                                  " fields, got " +
                                  std::to_string(fields.size()));
    }
    rows.push_back(fields);
    ++line;
  }
  return Table::FromGrid(std::move(name), std::move(headers), std::move(rows),
                         missing);
}

namespace {

void AppendField(std::string& out, const std::string& value) {
  if (value.find_first_of(",\"\r\n") == std::string::npos) {
    out += value;
    return;
  }
  out.push_back('"');
  for (char ch : value) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
}

}  // namespace

std::string ToCsv(const Table& table) {
  std::string out;
  const std::size_t width = table.num_cols();
  for (std::size_t c = 0; c < width; ++c) {
    if (c > 0) out.push_back(',');
    AppendField(out, table.column(c).name);
  }
  out.push_back('\n');
  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      if (c > 0) out.push_back(',');
      AppendField(out, table.raw(r, c));
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace lens
