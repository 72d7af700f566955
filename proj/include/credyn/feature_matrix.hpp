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

#include <algorithm>
#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "credyn/common.hpp"

namespace credyn {

enum class FeatureGroup : std::uint8_t { kFin, kFinHist, kNodeStats, kSocInt, kSocIntHist };

inline constexpr std::array<FeatureGroup, 5> kAllGroups = {
    FeatureGroup::kFin, FeatureGroup::kFinHist, FeatureGroup::kNodeStats, FeatureGroup::kSocInt,
    FeatureGroup::kSocIntHist};

inline constexpr std::array<std::string_view, 5> kGroupNames = {"FIN", "FIN_HIST", "NODE_STATS",
                                                                "SOC_INT", "SOC_INT_HIST"};

inline std::string_view to_string(FeatureGroup g) { return kGroupNames[static_cast<int>(g)]; }

inline std::optional<FeatureGroup> parse_feature_group(std::string_view s) {
  for (std::size_t i = 0; i < kGroupNames.size(); ++i)
    if (kGroupNames[i] == s) return static_cast<FeatureGroup>(i);
  return std::nullopt;
}

// Borrower features (FIN, FIN_HIST) versus network-derived ones.
inline bool is_network_group(FeatureGroup g) {
  return g == FeatureGroup::kNodeStats || g == FeatureGroup::kSocInt ||
         g == FeatureGroup::kSocIntHist;
}

struct FeatureColumn {
  std::string name;
  FeatureGroup group = FeatureGroup::kFin;
  std::vector<double> values;  // one per row; kMissing allowed
};

// Named, group-tagged columns over a set of borrower rows.
class FeatureMatrix {
 public:
  std::vector<std::string> row_ids;
  std::vector<FeatureColumn> columns;

  std::size_t rows() const { return row_ids.size(); }
  std::size_t cols() const { return columns.size(); }

  std::optional<std::size_t> column_index(std::string_view name) const {
    for (std::size_t j = 0; j < columns.size(); ++j)
      if (columns[j].name == name) return j;
    return std::nullopt;
  }

  std::vector<std::string> column_names() const {
    std::vector<std::string> out;
    out.reserve(columns.size());
    for (const auto& c : columns) out.push_back(c.name);
    return out;
  }

  // Throws SchemaError on duplicate names or ragged columns.
  void validate() const {
    std::unordered_set<std::string_view> seen;
    for (const auto& c : columns) {
      if (!seen.insert(c.name).second) throw SchemaError("duplicate column name " + c.name);
      if (c.values.size() != row_ids.size())
        throw SchemaError("column " + c.name + " has " + std::to_string(c.values.size()) +
                          " values for " + std::to_string(row_ids.size()) + " rows");
    }
  }

  FeatureMatrix select_rows(std::span<const std::size_t> idx) const {
    FeatureMatrix out;
    out.row_ids.reserve(idx.size());
    for (std::size_t i : idx) out.row_ids.push_back(row_ids[i]);
    out.columns.reserve(columns.size());
    for (const auto& c : columns) {
      FeatureColumn nc{c.name, c.group, {}};
      nc.values.reserve(idx.size());
      for (std::size_t i : idx) nc.values.push_back(c.values[i]);
      out.columns.push_back(std::move(nc));
    }
    return out;
  }

  // Columns in the order given; unknown names raise SchemaError.
  FeatureMatrix select_columns(std::span<const std::string> names) const {
    FeatureMatrix out;
    out.row_ids = row_ids;
    for (const auto& n : names) {
      auto j = column_index(n);
      if (!j) throw SchemaError("unknown column " + n);
      out.columns.push_back(columns[*j]);
    }
    return out;
  }

  FeatureMatrix select_groups(std::span<const FeatureGroup> groups) const {
    FeatureMatrix out;
    out.row_ids = row_ids;
    for (const auto& c : columns)
      if (std::find(groups.begin(), groups.end(), c.group) != groups.end()) out.columns.push_back(c);
    return out;
  }
};

}  // namespace credyn
