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

#ifndef LENS_RULES_HPP_
#define LENS_RULES_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lens/table.hpp"

namespace lens {

enum class RuleStatus { kGenerated, kConfirmed, kRejected, kCustom };

std::string_view RuleStatusName(RuleStatus status);
RuleStatus ParseRuleStatus(std::string_view name);

// Identity of a rule: both sides as sorted, duplicate-free column name lists.
struct RuleKey {
  std::vector<std::string> determinants;
  std::vector<std::string> dependents;

  bool operator==(const RuleKey&) const = default;

  // "a,b->c"
  std::string ToString() const;
  static RuleKey Parse(std::string_view text);
};

struct FDRule {
  std::vector<std::string> determinants;
  std::vector<std::string> dependents;
  RuleStatus status = RuleStatus::kGenerated;
  std::size_t support = 0;     // number of determinant groups
  std::size_t violations = 0;  // number of violating (group, dependent) pairs

  RuleKey key() const { return {determinants, dependents}; }
  bool enforced() const {
    return status == RuleStatus::kConfirmed || status == RuleStatus::kCustom;
  }
};

struct RuleSet {
  std::vector<FDRule> rules;

  const FDRule* Find(const RuleKey& key) const;
  FDRule* Find(const RuleKey& key);
  // Confirmed and Custom rules.
  std::vector<FDRule> Enforced() const;
};

// All minimal exact FDs X -> A with 1 <= |X| <= max_lhs, via level-wise
// stripped-partition refinement. Values compare as raw strings, so missing
// tokens behave like any other value. Throws kInvalidArgument when
// max_lhs < 1.
RuleSet DiscoverFds(const Table& table, std::size_t max_lhs = 2);

// Throws kNotFound for an unknown key and kInvalidArgument for kCustom or
// kGenerated targets.
RuleSet SetStatus(RuleSet rules, const RuleKey& key, RuleStatus status);

// Appends a Custom rule with support/violations measured on the table.
// Throws kInvalidArgument on empty sides, overlap, unknown columns or a
// duplicate key.
RuleSet AddCustomRule(RuleSet rules, std::vector<std::string> determinants,
                      std::vector<std::string> dependents, const Table& table);

struct ViolatingGroup {
  std::vector<std::string> determinant_values;
  std::vector<std::size_t> rows;
  std::size_t dependent_col = 0;
  // Most frequent dependent value; nullopt on a frequency tie.
  std::optional<std::string> mode;
};

// One entry per (determinant group, dependent column) where the dependent is
// not constant within the group. Groups appear in first-row order.
std::vector<ViolatingGroup> ViolatingGroups(const Table& table,
                                            const FDRule& rule);

// Recomputes support and violations against the table.
void MeasureRule(const Table& table, FDRule& rule);

void to_json(nlohmann::json& j, const FDRule& rule);
void from_json(const nlohmann::json& j, FDRule& rule);
void to_json(nlohmann::json& j, const RuleSet& rules);
void from_json(const nlohmann::json& j, RuleSet& rules);

}  // namespace lens

#endif  // LENS_RULES_HPP_
