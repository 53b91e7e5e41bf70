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

#include "lens/rules.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <unordered_map>

#include "lens/error.hpp"

namespace lens {

using nlohmann::json;

std::string_view RuleStatusName(RuleStatus status) {
  switch (status) {
    case RuleStatus::kGenerated: return "Generated";
    case RuleStatus::kConfirmed: return "Confirmed";
    case RuleStatus::kRejected: return "Rejected";
    case RuleStatus::kCustom: return "Custom";
  }
  return "Generated";
}

RuleStatus ParseRuleStatus(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return std::tolower(ch); });
  if (lower == "generated") return RuleStatus::kGenerated;
  if (lower == "confirmed" || lower == "confirm") return RuleStatus::kConfirmed;
  if (lower == "rejected" || lower == "reject") return RuleStatus::kRejected;
  if (lower == "custom") return RuleStatus::kCustom;
  Fail(ErrorCode::kInvalidArgument, "invalid rule status '" + std::string(name) + "'",
       "invalid_status");
}

namespace {

std::vector<std::string> Normalize(std::vector<std::string> names) {
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return names;
}

std::string JoinNames(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += names[i];
  }
  return out;
}

std::vector<std::string> SplitNames(std::string_view text) {
  std::vector<std::string> names;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string_view part = Trim(text.substr(
        start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!part.empty()) names.emplace_back(part);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return names;
}

}  // namespace

std::string RuleKey::ToString() const {
  return JoinNames(determinants) + "->" + JoinNames(dependents);
}

RuleKey RuleKey::Parse(std::string_view text) {
  const std::size_t arrow = text.find("->");
  if (arrow == std::string_view::npos) {
    Fail(ErrorCode::kInvalidArgument, "rule key must look like 'a,b->c'");
  }
  return {Normalize(SplitNames(text.substr(0, arrow))),
          Normalize(SplitNames(text.substr(arrow + 2)))};
}

const FDRule* RuleSet::Find(const RuleKey& key) const {
  for (const auto& rule : rules) {
    if (rule.key() == key) return &rule;
  }
  return nullptr;
}

FDRule* RuleSet::Find(const RuleKey& key) {
  for (auto& rule : rules) {
    if (rule.key() == key) return &rule;
  }
  return nullptr;
}

std::vector<FDRule> RuleSet::Enforced() const {
  std::vector<FDRule> out;
  for (const auto& rule : rules) {
    if (rule.enforced()) out.push_back(rule);
  }
  return out;
}

namespace {

// Equivalence classes of size >= 2 (stripped partition).
using Partition = std::vector<std::vector<std::uint32_t>>;

std::size_t PartitionError(const Partition& p) {
  std::size_t total = 0;
  for (const auto& cls : p) total += cls.size();
  return total - p.size();
}

Partition SingleColumnPartition(const Table& table, std::size_t col) {
  std::unordered_map<std::string_view, std::size_t> index;
  std::vector<std::vector<std::uint32_t>> classes;
  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    auto [it, inserted] = index.emplace(table.raw(r, col), classes.size());
    if (inserted) classes.emplace_back();
    classes[it->second].push_back(static_cast<std::uint32_t>(r));
  }
  Partition stripped;
  for (auto& cls : classes) {
    if (cls.size() >= 2) stripped.push_back(std::move(cls));
  }
  return stripped;
}

class PartitionProduct {
 public:
  explicit PartitionProduct(std::size_t rows) : owner_(rows, -1) {}

  Partition operator()(const Partition& a, const Partition& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (auto r : a[i]) owner_[r] = static_cast<std::int64_t>(i);
    }
    buckets_.assign(a.size(), {});
    Partition result;
    for (const auto& cls : b) {
      for (auto r : cls) {
        if (owner_[r] >= 0) buckets_[owner_[r]].push_back(r);
      }
      for (auto r : cls) {
        if (owner_[r] < 0) continue;
        auto& bucket = buckets_[owner_[r]];
        if (bucket.size() >= 2) result.push_back(bucket);
        bucket.clear();
      }
    }
    for (const auto& cls : a) {
      for (auto r : cls) owner_[r] = -1;
    }
    return result;
  }

 private:
  std::vector<std::int64_t> owner_;
  std::vector<std::vector<std::uint32_t>> buckets_;
};

// Sorted index combinations of size k from [0, n), lexicographic.
std::vector<std::vector<std::size_t>> Combinations(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  if (k == 0 || k > n) return out;
  std::vector<std::size_t> current(k);
  for (std::size_t i = 0; i < k; ++i) current[i] = i;
  while (true) {
    out.push_back(current);
    std::size_t i = k;
    while (i > 0 && current[i - 1] == n - k + i - 1) --i;
    if (i == 0) break;
    ++current[i - 1];
    for (std::size_t j = i; j < k; ++j) current[j] = current[j - 1] + 1;
  }
  return out;
}

}  // namespace

RuleSet DiscoverFds(const Table& table, std::size_t max_lhs) {
  if (max_lhs < 1) Fail(ErrorCode::kInvalidArgument, "max_lhs must be at least 1");
  if (table.num_rows() < 1) {
    Fail(ErrorCode::kInvalidArgument, "FD discovery needs at least one row");
  }
  const std::size_t n = table.num_cols();
  std::vector<Partition> single(n);
  std::vector<std::size_t> single_error(n);
  for (std::size_t c = 0; c < n; ++c) {
    single[c] = SingleColumnPartition(table, c);
    single_error[c] = PartitionError(single[c]);
  }
  PartitionProduct product(table.num_rows());

  // holds[X][A]: X -> A holds (minimal or not), for every X of the previous
  // and current level.
  std::map<std::vector<std::size_t>, std::vector<char>> holds_prev;
  std::map<std::vector<std::size_t>, Partition> partitions_prev;
  RuleSet result;
  const std::size_t top = std::min(max_lhs, n > 0 ? n - 1 : 0);
  for (std::size_t level = 1; level <= top; ++level) {
    std::map<std::vector<std::size_t>, std::vector<char>> holds_cur;
    std::map<std::vector<std::size_t>, Partition> partitions_cur;
    for (const auto& lhs : Combinations(n, level)) {
      Partition part;
      if (level == 1) {
        part = single[lhs[0]];
      } else {
        std::vector<std::size_t> prefix(lhs.begin(), lhs.end() - 1);
        part = product(partitions_prev.at(prefix), single[lhs.back()]);
      }
      const std::size_t error = PartitionError(part);
      std::vector<char> holds(n, 0);
      for (std::size_t a = 0; a < n; ++a) {
        if (std::binary_search(lhs.begin(), lhs.end(), a)) continue;
        bool implied = false;
        if (level > 1) {
          for (std::size_t drop = 0; drop < lhs.size() && !implied; ++drop) {
            std::vector<std::size_t> subset;
            for (std::size_t i = 0; i < lhs.size(); ++i) {
              if (i != drop) subset.push_back(lhs[i]);
            }
            implied = holds_prev.at(subset)[a] != 0;
          }
        }
        if (implied) {
          holds[a] = 1;
          continue;
        }
        bool holds_now;
        if (error == 0) {
          holds_now = true;  // superkey
        } else if (single_error[a] == 0) {
          holds_now = false;  // A is a key but X is not
        } else {
          holds_now = PartitionError(product(part, single[a])) == error;
        }
        if (!holds_now) continue;
        holds[a] = 1;
        FDRule rule;
        for (std::size_t c : lhs) rule.determinants.push_back(table.column(c).name);
        rule.determinants = Normalize(std::move(rule.determinants));
        rule.dependents = {table.column(a).name};
        rule.status = RuleStatus::kGenerated;
        MeasureRule(table, rule);
        result.rules.push_back(std::move(rule));
      }
      holds_cur.emplace(lhs, std::move(holds));
      if (level < top) partitions_cur.emplace(lhs, std::move(part));
    }
    holds_prev = std::move(holds_cur);
    partitions_prev = std::move(partitions_cur);
  }
  return result;
}

RuleSet SetStatus(RuleSet rules, const RuleKey& key, RuleStatus status) {
  if (status != RuleStatus::kConfirmed && status != RuleStatus::kRejected) {
    Fail(ErrorCode::kInvalidArgument,
         "status can only be set to Confirmed or Rejected", "invalid_status");
  }
  FDRule* rule = rules.Find(RuleKey{Normalize(key.determinants), Normalize(key.dependents)});
  if (rule == nullptr) Fail(ErrorCode::kNotFound, "no rule " + key.ToString());
  rule->status = status;
  return rules;
}

RuleSet AddCustomRule(RuleSet rules, std::vector<std::string> determinants,
                      std::vector<std::string> dependents, const Table& table) {
  determinants = Normalize(std::move(determinants));
  dependents = Normalize(std::move(dependents));
  if (determinants.empty() || dependents.empty()) {
    Fail(ErrorCode::kInvalidArgument,
         "a rule needs at least one determinant and one dependent column", "invalid_rule");
  }
  for (const auto& name : determinants) {
    if (std::binary_search(dependents.begin(), dependents.end(), name)) {
      Fail(ErrorCode::kInvalidArgument,
           "column '" + name + "' is both determinant and dependent", "invalid_rule");
    }
  }
  for (const auto* side : {&determinants, &dependents}) {
    for (const auto& name : *side) {
      if (!table.FindColumn(name)) {
        Fail(ErrorCode::kInvalidArgument, "unknown column '" + name + "'", "invalid_rule");
      }
    }
  }
  FDRule rule;
  rule.determinants = std::move(determinants);
  rule.dependents = std::move(dependents);
  rule.status = RuleStatus::kCustom;
  if (rules.Find(rule.key()) != nullptr) {
    Fail(ErrorCode::kAlreadyExists, "rule " + rule.key().ToString() + " already exists");
  }
  MeasureRule(table, rule);
  rules.rules.push_back(std::move(rule));
  return rules;
}

namespace {

struct Groups {
  std::vector<std::vector<std::string>> keys;
  std::vector<std::vector<std::size_t>> rows;
};

Groups GroupRows(const Table& table, const std::vector<std::size_t>& cols) {
  Groups groups;
  std::map<std::vector<std::string>, std::size_t> index;
  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    std::vector<std::string> key;
    key.reserve(cols.size());
    for (std::size_t c : cols) key.push_back(table.raw(r, c));
    auto [it, inserted] = index.emplace(key, groups.keys.size());
    if (inserted) {
      groups.keys.push_back(std::move(key));
      groups.rows.emplace_back();
    }
    groups.rows[it->second].push_back(r);
  }
  return groups;
}

}  // namespace

std::vector<ViolatingGroup> ViolatingGroups(const Table& table, const FDRule& rule) {
  std::vector<std::size_t> lhs;
  for (const auto& name : rule.determinants) lhs.push_back(table.ColumnIndex(name));
  std::vector<std::size_t> rhs;
  for (const auto& name : rule.dependents) rhs.push_back(table.ColumnIndex(name));
  const Groups groups = GroupRows(table, lhs);
  std::vector<ViolatingGroup> out;
  for (std::size_t g = 0; g < groups.keys.size(); ++g) {
    for (std::size_t dep : rhs) {
      std::map<std::string, std::size_t> counts;
      for (std::size_t r : groups.rows[g]) ++counts[table.raw(r, dep)];
      if (counts.size() < 2) continue;
      ViolatingGroup group;
      group.determinant_values = groups.keys[g];
      group.rows = groups.rows[g];
      group.dependent_col = dep;
      std::size_t best = 0;
      bool tie = false;
      for (const auto& [value, count] : counts) {
        if (count > best) {
          best = count;
          group.mode = value;
          tie = false;
        } else if (count == best) {
          tie = true;
        }
      }
      if (tie) group.mode.reset();
      out.push_back(std::move(group));
    }
  }
  return out;
}

void MeasureRule(const Table& table, FDRule& rule) {
  std::vector<std::size_t> lhs;
  for (const auto& name : rule.determinants) lhs.push_back(table.ColumnIndex(name));
  rule.support = GroupRows(table, lhs).keys.size();
  rule.violations = ViolatingGroups(table, rule).size();
}

void to_json(json& j, const FDRule& rule) {
  j = json{{"determinants", rule.determinants},
           {"dependents", rule.dependents},
           {"status", RuleStatusName(rule.status)},
           {"support", rule.support},
           {"violations", rule.violations}};
}

void from_json(const json& j, FDRule& rule) {
  rule.determinants = Normalize(j.at("determinants").get<std::vector<std::string>>());
  rule.dependents = Normalize(j.at("dependents").get<std::vector<std::string>>());
  rule.status = ParseRuleStatus(j.at("status").get<std::string>());
  rule.support = j.value("support", std::size_t{0});
  rule.violations = j.value("violations", std::size_t{0});
}

void to_json(json& j, const RuleSet& rules) {
  j = json::array();
  for (const auto& rule : rules.rules) j.push_back(rule);
}

void from_json(const json& j, RuleSet& rules) {
  rules.rules.clear();
  for (const auto& entry : j) rules.rules.push_back(entry.get<FDRule>());
}

}  // namespace lens
