/*
 * Copyright 2026 The credyn Authors.
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

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "credyn/common.hpp"

namespace credyn {

enum class NodeKind : std::uint8_t { kPerson, kCompany };

inline std::string_view to_string(NodeKind k) {
  return k == NodeKind::kPerson ? "PERSON" : "COMPANY";
}

inline std::optional<NodeKind> parse_node_kind(std::string_view s) {
  if (s == "PERSON") return NodeKind::kPerson;
  if (s == "COMPANY") return NodeKind::kCompany;
  return std::nullopt;
}

enum class DpdBucket : std::uint8_t { kCurrent, k1To29, k30To59, k60To89, k90Plus };

inline constexpr std::array<std::string_view, 5> kDpdNames = {
    "CURRENT", "DPD_1_29", "DPD_30_59", "DPD_60_89", "DPD_90_PLUS"};

inline std::string_view to_string(DpdBucket b) {
  return kDpdNames[static_cast<std::size_t>(b)];
}

inline std::optional<DpdBucket> parse_dpd_bucket(std::string_view s) {
  for (std::size_t i = 0; i < kDpdNames.size(); ++i)
    if (kDpdNames[i] == s) return static_cast<DpdBucket>(i);
  return std::nullopt;
}

// Ordinal code, CURRENT=0 ... DPD_90_PLUS=4.
inline int dpd_code(DpdBucket b) { return static_cast<int>(b); }

struct MonthlyFinancialState {
  int month = 0;  // calendar month, 1-based
  double debt_consumer = 0.0;
  double debt_commercial = 0.0;
  double debt_mortgage = 0.0;
  double revolving_amount = 0.0;
  DpdBucket dpd_bucket = DpdBucket::kCurrent;
  bool has_active_loan = false;

  double total_debt() const { return debt_consumer + debt_commercial + debt_mortgage; }

  // Inclusion rule for snapshots: an open loan or any outstanding balance.
  bool has_credit_relationship() const {
    return has_active_loan || total_debt() > 0.0 || revolving_amount > 0.0;
  }

  bool operator==(const MonthlyFinancialState&) const = default;
};

// Monthly states of every node over calendar months 1..horizon, plus the
// cohort of first-time borrowers with their origination month.
class BorrowerPanel {
 public:
  struct Record {
    std::string id;
    NodeKind kind = NodeKind::kPerson;
    // months[m - 1] holds calendar month m; unobserved months are nullopt.
    std::vector<std::optional<MonthlyFinancialState>> months;
  };

  struct CohortMember {
    std::string id;
    int origination_month = 1;
    bool operator==(const CohortMember&) const = default;
  };

  BorrowerPanel() = default;
  explicit BorrowerPanel(int horizon) : horizon_(horizon) {}

  int horizon() const { return horizon_; }
  const std::vector<Record>& records() const { return records_; }
  const std::vector<CohortMember>& cohort() const { return cohort_; }

  // Returns the record index, creating the record if it is new.
  std::size_t add_borrower(std::string id, NodeKind kind) {
    auto [it, inserted] = index_.try_emplace(id, records_.size());
    if (inserted) {
      records_.push_back(Record{std::move(id), kind, {}});
      records_.back().months.resize(static_cast<std::size_t>(horizon_));
    } else if (records_[it->second].kind != kind) {
      throw Error("borrower " + it->first + " has conflicting kinds");
    }
    return it->second;
  }

  void set_state(std::size_t record, const MonthlyFinancialState& s) {
    if (s.month < 1 || s.month > horizon_)
      throw Error("month " + std::to_string(s.month) + " outside panel horizon");
    records_[record].months[static_cast<std::size_t>(s.month - 1)] = s;
  }

  void add_cohort_member(CohortMember m) { cohort_.push_back(std::move(m)); }

  std::optional<std::size_t> find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const MonthlyFinancialState* state(std::size_t record, int month) const {
    if (month < 1 || month > horizon_) return nullptr;
    const auto& m = records_[record].months[static_cast<std::size_t>(month - 1)];
    return m ? &*m : nullptr;
  }

  // First observed month of a record, or nullopt if never observed.
  std::optional<int> first_observed(std::size_t record) const {
    const auto& ms = records_[record].months;
    for (std::size_t i = 0; i < ms.size(); ++i)
      if (ms[i]) return static_cast<int>(i) + 1;
    return std::nullopt;
  }

  bool operator==(const BorrowerPanel& o) const {
    if (horizon_ != o.horizon_ || cohort_ != o.cohort_ || records_.size() != o.records_.size())
      return false;
    for (std::size_t i = 0; i < records_.size(); ++i) {
      const auto& a = records_[i];
      const auto& b = o.records_[i];
      if (a.id != b.id || a.kind != b.kind || a.months != b.months) return false;
    }
    return true;
  }

 private:
  int horizon_ = 0;
  std::vector<Record> records_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<CohortMember> cohort_;
};

}  // namespace credyn
