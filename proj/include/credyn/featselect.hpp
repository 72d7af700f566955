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
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "credyn/common.hpp"
#include "credyn/evalkit.hpp"
#include "credyn/feature_matrix.hpp"

namespace credyn::featselect {

struct SelectionConfig {
  double ks_min = 0.01;
  double auc_min = 0.53;
  double rho = 0.7;
  // Pairs with fewer complete rows are treated as uncorrelated.
  std::size_t min_pairwise_rows = 30;

  void validate() const {
    if (!(ks_min >= 0.0 && ks_min <= 1.0)) throw ConfigError("ks_min", "must lie in [0, 1]");
    if (!(auc_min >= 0.5 && auc_min <= 1.0)) throw ConfigError("auc_min", "must lie in [0.5, 1]");
    if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("rho", "must lie in (0, 1]");
  }
};

enum class DropReason { kLowKs, kLowAuc, kCorrelatedWith };
enum class Stage { kPerGroup, kGlobal };

inline std::string_view to_string(DropReason r) {
  switch (r) {
    case DropReason::kLowKs: return "LOW_KS";
    case DropReason::kLowAuc: return "LOW_AUC";
    case DropReason::kCorrelatedWith: return "CORRELATED_WITH";
  }
  return "";
}

inline std::string_view to_string(Stage s) { return s == Stage::kPerGroup ? "PER_GROUP" : "GLOBAL"; }

struct Dropped {
  std::string column;
  DropReason reason = DropReason::kLowKs;
  std::string correlated_with;  // set for kCorrelatedWith
};

struct SelectionReport {
  Stage stage = Stage::kPerGroup;
  std::vector<std::string> kept;
  std::vector<Dropped> dropped;
};

class EmptySelectionError : public Error {
 public:
  using Error::Error;
};

struct Univariate {
  double ks = 0.0;
  double auc = 0.5;  // oriented: max(a, 1 - a)
  std::size_t n = 0;
};

// KS and oriented AUC of a raw column used as a score, over its non-missing
// rows. Degenerate columns (all missing, one class) score KS 0, AUC 0.5.
inline Univariate univariate(std::span<const double> values, std::span<const int> labels) {
  std::vector<double> s;
  std::vector<int> y;
  bool pos = false, neg = false;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (is_missing(values[i])) continue;
    s.push_back(values[i]);
    y.push_back(labels[i]);
    (labels[i] == 1 ? pos : neg) = true;
  }
  Univariate u;
  u.n = s.size();
  if (!pos || !neg) return u;
  u.ks = evalkit::ks(s, y);
  const double a = evalkit::auc(s, y);
  u.auc = std::max(a, 1.0 - a);
  return u;
}

// Pearson r over rows where both columns are present; 0 when fewer than
// min_rows such rows exist or either side is constant.
inline double pearson(std::span<const double> x, std::span<const double> y, std::size_t min_rows) {
  double sx = 0, sy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (is_missing(x[i]) || is_missing(y[i])) continue;
    sx += x[i];
    sy += y[i];
    ++n;
  }
  if (n < std::max<std::size_t>(min_rows, 2)) return 0.0;
  const double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (is_missing(x[i]) || is_missing(y[i])) continue;
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace detail {

inline void check_inputs(const FeatureMatrix& m, std::span<const int> labels) {
  if (m.rows() == 0 || m.cols() == 0) throw Error("feature selection on an empty matrix");
  if (labels.size() != m.rows()) throw Error("label count does not match matrix rows");
  for (int y : labels)
    if (y != 0 && y != 1) throw Error("labels must be binary");
}

// Greedy pruning over the named columns; returns the report for them.
inline SelectionReport prune(const FeatureMatrix& m, std::span<const int> labels,
                             const std::vector<std::size_t>& cols, const SelectionConfig& cfg,
                             Stage stage) {
  struct Ranked {
    std::size_t col;
    Univariate u;
  };
  std::vector<Ranked> ranked;
  for (std::size_t j : cols) ranked.push_back({j, univariate(m.columns[j].values, labels)});
  std::sort(ranked.begin(), ranked.end(), [&](const Ranked& a, const Ranked& b) {
    if (a.u.ks != b.u.ks) return a.u.ks > b.u.ks;
    if (a.u.auc != b.u.auc) return a.u.auc > b.u.auc;
    return m.columns[a.col].name < m.columns[b.col].name;
  });
  SelectionReport rep;
  rep.stage = stage;
  std::vector<bool> alive(ranked.size(), true);
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (!alive[i]) continue;
    const auto& top = m.columns[ranked[i].col];
    rep.kept.push_back(top.name);
    for (std::size_t k = i + 1; k < ranked.size(); ++k) {
      if (!alive[k]) continue;
      const auto& other = m.columns[ranked[k].col];
      if (std::abs(pearson(top.values, other.values, cfg.min_pairwise_rows)) > cfg.rho) {
        alive[k] = false;
        rep.dropped.push_back({other.name, DropReason::kCorrelatedWith, top.name});
      }
    }
  }
  return rep;
}

inline std::vector<std::size_t> all_columns(const FeatureMatrix& m) {
  std::vector<std::size_t> v(m.cols());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = j;
  return v;
}

}  // namespace detail

// Keeps a column iff its univariate KS > ks_min and AUC > auc_min.
inline SelectionReport univariate_screen(const FeatureMatrix& m, std::span<const int> labels,
                                         const SelectionConfig& cfg) {
  cfg.validate();
  detail::check_inputs(m, labels);
  SelectionReport rep;
  for (const auto& c : m.columns) {
    const Univariate u = univariate(c.values, labels);
    if (u.n == 0 || u.ks <= cfg.ks_min) rep.dropped.push_back({c.name, DropReason::kLowKs, {}});
    else if (u.auc <= cfg.auc_min) rep.dropped.push_back({c.name, DropReason::kLowAuc, {}});
    else rep.kept.push_back(c.name);
  }
  return rep;
}

// Greedy correlation pruning: repeatedly keep the strongest remaining column
// (KS, then AUC, then name) and drop every column with |r| > rho against it.
inline SelectionReport correlation_prune(const FeatureMatrix& m, std::span<const int> labels,
                                         const SelectionConfig& cfg) {
  cfg.validate();
  detail::check_inputs(m, labels);
  return detail::prune(m, labels, detail::all_columns(m), cfg, Stage::kPerGroup);
}

struct TwoStageReport {
  std::map<FeatureGroup, SelectionReport> per_group;
  SelectionReport global;
  // Univariate survivors before any pruning, across all groups.
  std::vector<std::string> screened;
  const std::vector<std::string>& kept() const { return global.kept; }
};

// Screen and prune inside each group, then prune again across the union of
// the group survivors. Throws EmptySelectionError when nothing survives.
inline TwoStageReport two_stage_select(const FeatureMatrix& m, std::span<const int> labels,
                                       const SelectionConfig& cfg) {
  cfg.validate();
  detail::check_inputs(m, labels);
  TwoStageReport out;
  const SelectionReport screen = univariate_screen(m, labels, cfg);
  out.screened = screen.kept;
  std::vector<std::size_t> survivors;
  for (FeatureGroup g : kAllGroups) {
    std::vector<std::size_t> cols;
    SelectionReport rep;
    rep.stage = Stage::kPerGroup;
    bool present = false;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (m.columns[j].group != g) continue;
      present = true;
      const auto& name = m.columns[j].name;
      if (std::find(screen.kept.begin(), screen.kept.end(), name) != screen.kept.end())
        cols.push_back(j);
    }
    if (!present) continue;
    for (const auto& d : screen.dropped)
      if (m.columns[*m.column_index(d.column)].group == g) rep.dropped.push_back(d);
    const SelectionReport pruned = detail::prune(m, labels, cols, cfg, Stage::kPerGroup);
    rep.kept = pruned.kept;
    rep.dropped.insert(rep.dropped.end(), pruned.dropped.begin(), pruned.dropped.end());
    for (const auto& name : rep.kept) survivors.push_back(*m.column_index(name));
    out.per_group[g] = std::move(rep);
  }
  out.global = detail::prune(m, labels, survivors, cfg, Stage::kGlobal);
  if (out.global.kept.empty()) throw EmptySelectionError("no feature survived selection");
  return out;
}

}  // namespace credyn::featselect
