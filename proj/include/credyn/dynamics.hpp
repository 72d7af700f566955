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
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "credyn/common.hpp"
#include "credyn/evalkit.hpp"
#include "credyn/feature_matrix.hpp"
#include "credyn/featselect.hpp"
#include "credyn/featurelab.hpp"
#include "credyn/gbdt.hpp"
#include "credyn/panel.hpp"
#include "credyn/parallel.hpp"
#include "credyn/shap.hpp"

namespace credyn::dynamics {

// ---------------------------------------------------------------------------
// Snapshots
// ---------------------------------------------------------------------------

struct SnapshotRow {
  std::size_t record = 0;
  std::string id;
  int label = 0;  // 1 = DEFAULTER
  int observation_month = 1;  // calendar month
  int history_start = 1;      // origination month
};

struct Snapshot {
  int month_since_grant = 1;
  std::vector<SnapshotRow> rows;

  double default_rate() const {
    if (rows.empty()) return 0.0;
    double d = 0.0;
    for (const auto& r : rows) d += r.label;
    return d / static_cast<double>(rows.size());
  }
};

// Snapshot i holds cohort members observed i months after origination
// (relative month 1 = origination month) that have been continuously
// eligible: never DPD_90_PLUS and always holding a credit relationship at
// relative months 1..i. Exclusion is permanent. The label marks DPD_90_PLUS
// within relative months i+1 .. i+outcome_window.
inline std::vector<Snapshot> build_snapshots(const BorrowerPanel& panel, int max_month = 12,
                                             int outcome_window = 12) {
  if (max_month < 1) throw Error("snapshot months must start at 1");
  if (outcome_window < 1) throw Error("outcome window must be positive");
  for (int i = 1; i <= max_month; ++i)
    for (const auto& c : panel.cohort())
      if (c.origination_month + i - 1 + outcome_window > panel.horizon())
        throw Error("panel horizon " + std::to_string(panel.horizon()) +
                    " too short for snapshot month " + std::to_string(i));

  std::vector<Snapshot> snaps(static_cast<std::size_t>(max_month));
  for (int i = 1; i <= max_month; ++i) snaps[static_cast<std::size_t>(i - 1)].month_since_grant = i;
  for (const auto& c : panel.cohort()) {
    const auto rec = panel.find(c.id);
    if (!rec) throw Error("cohort member " + c.id + " missing from panel");
    const int o = c.origination_month;
    auto defaulted_at = [&](int cal) {
      const auto* s = panel.state(*rec, cal);
      return s && s->dpd_bucket == DpdBucket::k90Plus;
    };
    for (int i = 1; i <= max_month; ++i) {
      const int cal = o + i - 1;
      const auto* s = panel.state(*rec, cal);
      if (!s || s->dpd_bucket == DpdBucket::k90Plus || !s->has_credit_relationship()) break;
      int label = 0;
      for (int m = cal + 1; m <= cal + outcome_window; ++m)
        if (defaulted_at(m)) {
          label = 1;
          break;
        }
      snaps[static_cast<std::size_t>(i - 1)].rows.push_back({*rec, c.id, label, cal, o});
    }
  }
  return snaps;
}

// ---------------------------------------------------------------------------
// Smoothing and scaling
// ---------------------------------------------------------------------------

// LOWESS without robustness iterations: at every x_i, a tricube-weighted
// linear fit over the ceil(frac * n) nearest points. When the local design
// is degenerate (all weighted x equal) the weighted mean is used.
inline std::vector<double> lowess(std::span<const double> x, std::span<const double> y, double frac) {
  const std::size_t n = x.size();
  if (n != y.size()) throw Error("lowess: x and y differ in length");
  if (n < 3) throw Error("lowess: need at least 3 points");
  if (!(frac > 0.0 && frac <= 1.0)) throw Error("lowess: frac must lie in (0, 1]");
  const std::size_t k = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(frac * static_cast<double>(n))));
  std::vector<double> out(n), dist(n), sorted(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) dist[j] = std::abs(x[j] - x[i]);
    sorted = dist;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
    const double h = sorted[k - 1];
    double sw = 0, swx = 0, swy = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (h > 0.0) {
        const double u = dist[j] / h;
        w[j] = u < 1.0 ? std::pow(1.0 - u * u * u, 3) : 0.0;
      } else {
        w[j] = dist[j] == 0.0 ? 1.0 : 0.0;
      }
      sw += w[j];
      swx += w[j] * x[j];
      swy += w[j] * y[j];
    }
    const double xm = swx / sw, ym = swy / sw;
    double sxx = 0, sxy = 0;
    for (std::size_t j = 0; j < n; ++j) {
      sxx += w[j] * (x[j] - xm) * (x[j] - xm);
      sxy += w[j] * (x[j] - xm) * (y[j] - ym);
    }
    const double scale = std::max(1.0, std::abs(xm));
    if (sxx <= 1e-12 * scale * scale * sw) {
      out[i] = ym;
    } else {
      out[i] = ym + (sxy / sxx) * (x[i] - xm);
    }
  }
  return out;
}

// (v - min) / (max - min); a constant series maps to zeros. NaN entries are
// ignored for the range and stay NaN.
inline std::vector<double> minmax_scale(std::span<const double> v) {
  if (v.empty()) throw Error("minmax_scale: empty series");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double x : v)
    if (!std::isnan(x)) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (std::isnan(v[i])) out[i] = v[i];
    else out[i] = hi > lo ? (v[i] - lo) / (hi - lo) : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Study protocol
// ---------------------------------------------------------------------------

enum class Experiment { kE1, kE2, kE3 };

inline std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::kE1: return "E1";
    case Experiment::kE2: return "E2";
    case Experiment::kE3: return "E3";
  }
  return "";
}

inline std::optional<Experiment> parse_experiment(std::string_view s) {
  if (s == "E1") return Experiment::kE1;
  if (s == "E2") return Experiment::kE2;
  if (s == "E3") return Experiment::kE3;
  return std::nullopt;
}

inline std::vector<FeatureGroup> feature_groups(Experiment e) {
  switch (e) {
    case Experiment::kE1: return {FeatureGroup::kFin};
    case Experiment::kE2: return {FeatureGroup::kFin, FeatureGroup::kFinHist};
    case Experiment::kE3: return {kAllGroups.begin(), kAllGroups.end()};
  }
  return {};
}

struct StudyConfig {
  std::vector<Experiment> experiments{Experiment::kE1, Experiment::kE2, Experiment::kE3};
  int first_month = 1;
  int last_month = 12;
  double tuning_fraction = 0.3;
  int cv_folds = 10;
  int tuning_folds = 3;
  featselect::SelectionConfig selection;
  gbdt::GridSpec grid;
  std::uint64_t seed = 42;
  std::size_t shap_sample_max = 2000;
  double lowess_frac = 0.5;
  std::size_t threads = 1;
  bool keep_models = false;  // retain per-fold models in the cells

  void validate() const {
    if (experiments.empty()) throw ConfigError("experiments", "no experiment requested");
    if (first_month < 1 || last_month < first_month)
      throw ConfigError("months", "need 1 <= first_month <= last_month");
    if (!(tuning_fraction > 0.0 && tuning_fraction < 1.0))
      throw ConfigError("tuning_fraction", "must lie in (0, 1)");
    if (cv_folds < 2) throw ConfigError("cv_folds", "must be at least 2");
    if (tuning_folds < 2) throw ConfigError("tuning_folds", "must be at least 2");
    if (shap_sample_max < 1) throw ConfigError("shap_sample_max", "must be positive");
    selection.validate();
    grid.validate();
  }
};

struct CellResult {
  Experiment experiment = Experiment::kE1;
  int month = 1;
  bool ok = false;
  std::string error;
  std::size_t n_tuning = 0;
  std::size_t n_training = 0;
  double default_rate = 0.0;
  std::vector<std::string> screened;  // univariate survivors on the tuning partition
  std::vector<std::string> selected;
  gbdt::HyperParams params;
  std::vector<gbdt::GridPoint> grid;
  evalkit::CvResult cv;
  std::vector<shap::GroupImportance> importance;  // per fold; E3 only
  std::vector<gbdt::BoostedModel> models;         // per fold when requested
};

struct Comparison {
  std::string kind;  // "consecutive" or "experiment"
  Experiment base_experiment = Experiment::kE1;
  Experiment other_experiment = Experiment::kE1;
  int base_month = 1;
  int other_month = 1;
  bool ok = false;
  std::string note;
  evalkit::ComparisonResult ks;
  evalkit::ComparisonResult auc;
};

struct SnapshotSummary {
  int month = 1;
  std::size_t rows = 0;
  double default_rate = 0.0;
};

struct ExperimentReport {
  std::vector<SnapshotSummary> snapshots;
  std::vector<CellResult> cells;
  std::vector<Comparison> consecutive;
  std::vector<Comparison> between;
  // E3 fold-level network shares with their LOWESS fit.
  std::vector<int> importance_month;
  std::vector<int> importance_fold;
  std::vector<double> importance_network_share;
  std::vector<double> importance_lowess;
  // Per-month overlay series before and after min-max scaling.
  std::vector<int> overlay_month;
  std::vector<double> overlay_ks_increment, overlay_auc_increment, overlay_network_share;
  std::vector<double> overlay_ks_scaled, overlay_auc_scaled, overlay_network_scaled;

  const CellResult* cell(Experiment e, int month) const {
    for (const auto& c : cells)
      if (c.experiment == e && c.month == month) return &c;
    return nullptr;
  }
  const Comparison* find_consecutive(Experiment e, int month) const {
    for (const auto& c : consecutive)
      if (c.base_experiment == e && c.base_month == month) return &c;
    return nullptr;
  }
  const Comparison* find_between(Experiment base, Experiment other, int month) const {
    for (const auto& c : between)
      if (c.base_experiment == base && c.other_experiment == other && c.base_month == month) return &c;
    return nullptr;
  }
};

// Borrower-level stratified split: within each label stratum, the 30% (by
// default) with the smallest seeded hash form the tuning partition.
inline std::vector<bool> tuning_partition(std::span<const std::string> ids, std::span<const int> labels,
                                          double fraction, std::uint64_t seed) {
  std::vector<bool> tuning(ids.size(), false);
  for (int stratum = 0; stratum <= 1; ++stratum) {
    std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (labels[i] == stratum) keyed.emplace_back(hash_id(ids[i], seed ^ 0x7475e1ULL), i);
    std::sort(keyed.begin(), keyed.end());
    const auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(keyed.size())));
    for (std::size_t k = 0; k < take && k < keyed.size(); ++k) tuning[keyed[k].second] = true;
  }
  return tuning;
}

// Deterministic explanation sample: the `max_rows` rows of `rows` with the
// smallest seeded hash of their borrower id.
inline std::vector<std::size_t> explanation_sample(std::span<const std::size_t> rows,
                                                   std::span<const std::string> ids,
                                                   std::size_t max_rows, std::uint64_t seed) {
  std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
  for (std::size_t r : rows) keyed.emplace_back(hash_id(ids[r], seed ^ 0x5368617055ULL), r);
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < keyed.size() && k < max_rows; ++k) out.push_back(keyed[k].second);
  std::sort(out.begin(), out.end());
  return out;
}

namespace detail {

inline std::vector<int> take(std::span<const int> v, std::span<const std::size_t> idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(v[i]);
  return out;
}

// Runs selection, tuning and cross-validation for one (experiment, month).
inline void run_cell(CellResult& cell, const FeatureMatrix& full, std::span<const int> labels,
                     std::span<const char> is_tuning, const StudyConfig& cfg) {
  try {
    const FeatureMatrix m = full.select_groups(feature_groups(cell.experiment));
    std::vector<std::size_t> tune_idx, train_idx;
    for (std::size_t i = 0; i < m.rows(); ++i) (is_tuning[i] ? tune_idx : train_idx).push_back(i);
    cell.n_tuning = tune_idx.size();
    cell.n_training = train_idx.size();
    cell.default_rate = 0.0;
    for (int y : labels) cell.default_rate += y;
    cell.default_rate /= static_cast<double>(std::max<std::size_t>(1, labels.size()));

    const FeatureMatrix tune = m.select_rows(tune_idx);
    const auto y_tune = take(labels, tune_idx);
    const auto sel = featselect::two_stage_select(tune, y_tune, cfg.selection);
    cell.screened = sel.screened;
    cell.selected = sel.kept();
    const FeatureMatrix tune_sel = tune.select_columns(cell.selected);
    const auto grid = gbdt::grid_search(tune_sel, y_tune, cfg.grid, cfg.tuning_folds, cfg.seed);
    cell.params = grid.best;
    cell.grid = grid.table;

    const FeatureMatrix train = m.select_rows(train_idx).select_columns(cell.selected);
    const auto y_train = take(labels, train_idx);
    const auto fold_of = evalkit::make_folds(train.row_ids, cfg.cv_folds, cfg.seed);
    cell.cv = {};
    cell.cv.fold_assignment_id = evalkit::fold_assignment_id(cfg.cv_folds, cfg.seed);
    std::vector<FeatureGroup> groups;
    for (const auto& c : train.columns) groups.push_back(c.group);
    for (int f = 0; f < cfg.cv_folds; ++f) {
      std::vector<std::size_t> tr, te;
      for (std::size_t i = 0; i < train.rows(); ++i) (fold_of[i] == f ? te : tr).push_back(i);
      const auto xtr = gbdt::DenseMatrix::from(train, tr);
      const auto xte = gbdt::DenseMatrix::from(train, te);
      const auto ytr = take(y_train, tr);
      const auto yte = take(y_train, te);
      const auto model = gbdt::train(xtr, ytr, train.column_names(), cell.params);
      const auto margin = gbdt::predict_margins(model, xte);
      cell.cv.folds.push_back({evalkit::ks(margin, yte), evalkit::auc(margin, yte)});
      if (cfg.keep_models) cell.models.push_back(model);
      if (cell.experiment == Experiment::kE3) {
        std::vector<std::size_t> local(te.size());
        std::iota(local.begin(), local.end(), 0);
        std::vector<std::string> te_ids;
        for (auto i : te) te_ids.push_back(train.row_ids[i]);
        const auto sample = explanation_sample(local, te_ids, cfg.shap_sample_max, cfg.seed);
        std::vector<std::size_t> sample_rows;
        for (auto s : sample) sample_rows.push_back(te[s]);
        const auto xs = gbdt::DenseMatrix::from(train, sample_rows);
        cell.importance.push_back(shap::group_importance(model, xs, groups));
      }
    }
    evalkit::summarize(cell.cv);
    cell.ok = true;
  } catch (const Error& e) {
    cell.ok = false;
    cell.error = e.what();
  }
}

inline Comparison compare_cells(const CellResult* a, const CellResult* b, std::string kind) {
  Comparison c;
  c.kind = std::move(kind);
  if (a) {
    c.base_experiment = a->experiment;
    c.base_month = a->month;
  }
  if (b) {
    c.other_experiment = b->experiment;
    c.other_month = b->month;
  }
  if (!a || !b || !a->ok || !b->ok) {
    c.note = "skipped: missing or failed cell";
    return c;
  }
  c.ks = evalkit::paired_ttest(a->cv.values(evalkit::Metric::kKs), b->cv.values(evalkit::Metric::kKs));
  c.auc = evalkit::paired_ttest(a->cv.values(evalkit::Metric::kAuc), b->cv.values(evalkit::Metric::kAuc));
  c.ok = true;
  if (!c.ks.increment_defined || !c.auc.increment_defined) c.note = "relative increment undefined";
  return c;
}

}  // namespace detail

// Fills consecutive-month and between-experiment comparisons plus the
// importance trend and the min-max overlay from the CV cells.
inline void compare(ExperimentReport& rep, const StudyConfig& cfg) {
  rep.consecutive.clear();
  rep.between.clear();
  for (Experiment e : cfg.experiments)
    for (int m = cfg.first_month; m < cfg.last_month; ++m) {
      Comparison c = detail::compare_cells(rep.cell(e, m), rep.cell(e, m + 1), "consecutive");
      c.base_experiment = c.other_experiment = e;
      c.base_month = m;
      c.other_month = m + 1;
      rep.consecutive.push_back(std::move(c));
    }
  const std::pair<Experiment, Experiment> pairs[] = {{Experiment::kE1, Experiment::kE2},
                                                     {Experiment::kE2, Experiment::kE3}};
  auto wanted = [&](Experiment e) {
    return std::find(cfg.experiments.begin(), cfg.experiments.end(), e) != cfg.experiments.end();
  };
  for (auto [base, other] : pairs) {
    if (!wanted(base) || !wanted(other)) continue;
    for (int m = cfg.first_month; m <= cfg.last_month; ++m) {
      Comparison c = detail::compare_cells(rep.cell(base, m), rep.cell(other, m), "experiment");
      c.base_experiment = base;
      c.other_experiment = other;
      c.base_month = c.other_month = m;
      rep.between.push_back(std::move(c));
    }
  }

  rep.importance_month.clear();
  rep.importance_fold.clear();
  rep.importance_network_share.clear();
  rep.importance_lowess.clear();
  for (int m = cfg.first_month; m <= cfg.last_month; ++m) {
    const auto* c = rep.cell(Experiment::kE3, m);
    if (!c || !c->ok) continue;
    for (std::size_t f = 0; f < c->importance.size(); ++f)
      if (const auto& g = c->importance[f]; g.defined) {
        rep.importance_month.push_back(m);
        rep.importance_fold.push_back(static_cast<int>(f));
        rep.importance_network_share.push_back(g.network_share);
      }
  }
  if (rep.importance_month.size() >= 3) {
    std::vector<double> xs(rep.importance_month.begin(), rep.importance_month.end());
    rep.importance_lowess = lowess(xs, rep.importance_network_share, cfg.lowess_frac);
  }

  rep.overlay_month.clear();
  rep.overlay_ks_increment.clear();
  rep.overlay_auc_increment.clear();
  rep.overlay_network_share.clear();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (wanted(Experiment::kE2) && wanted(Experiment::kE3)) {
    for (int m = cfg.first_month; m <= cfg.last_month; ++m) {
      rep.overlay_month.push_back(m);
      const auto* c = rep.find_between(Experiment::kE2, Experiment::kE3, m);
      rep.overlay_ks_increment.push_back(c && c->ok ? c->ks.relative_increment : nan);
      rep.overlay_auc_increment.push_back(c && c->ok ? c->auc.relative_increment : nan);
      double share = nan;
      if (const auto* cell = rep.cell(Experiment::kE3, m); cell && cell->ok) {
        double s = 0;
        std::size_t n = 0;
        for (const auto& g : cell->importance)
          if (g.defined) {
            s += g.network_share;
            ++n;
          }
        if (n) share = s / static_cast<double>(n);
      }
      rep.overlay_network_share.push_back(share);
    }
    if (!rep.overlay_month.empty()) {
      rep.overlay_ks_scaled = minmax_scale(rep.overlay_ks_increment);
      rep.overlay_auc_scaled = minmax_scale(rep.overlay_auc_increment);
      rep.overlay_network_scaled = minmax_scale(rep.overlay_network_share);
    }
  }
}

// Full protocol over the given snapshots. Feature matrices are built once
// per month with every group; cells then run independently.
inline ExperimentReport run_study(const featurelab::FeatureBuilder& builder,
                                  std::span<const Snapshot> snapshots, const StudyConfig& cfg) {
  cfg.validate();
  ExperimentReport rep;
  for (const auto& s : snapshots) rep.snapshots.push_back({s.month_since_grant, s.rows.size(), s.default_rate()});
  const auto first = std::find_if(snapshots.begin(), snapshots.end(),
                                  [](const Snapshot& s) { return s.month_since_grant == 1; });
  if (first == snapshots.end()) throw Error("run_study needs snapshot month 1");

  // One cohort-level partition reused by every month and experiment.
  std::vector<std::string> cohort_ids;
  std::vector<int> cohort_labels;
  for (const auto& r : first->rows) {
    cohort_ids.push_back(r.id);
    cohort_labels.push_back(r.label);
  }
  const auto tuning_flags = tuning_partition(cohort_ids, cohort_labels, cfg.tuning_fraction, cfg.seed);
  std::map<std::string, bool> is_tuning_id;
  for (std::size_t i = 0; i < cohort_ids.size(); ++i) is_tuning_id[cohort_ids[i]] = tuning_flags[i];

  for (int m = cfg.first_month; m <= cfg.last_month; ++m) {
    const auto it = std::find_if(snapshots.begin(), snapshots.end(),
                                 [&](const Snapshot& s) { return s.month_since_grant == m; });
    if (it == snapshots.end()) throw Error("missing snapshot for month " + std::to_string(m));
    std::vector<featurelab::Observation> obs;
    std::vector<int> labels;
    std::vector<char> tuning;
    for (const auto& r : it->rows) {
      obs.push_back({r.record, r.observation_month, r.history_start});
      labels.push_back(r.label);
      const auto f = is_tuning_id.find(r.id);
      tuning.push_back(f != is_tuning_id.end() && f->second);
    }
    std::vector<FeatureGroup> groups;
    for (Experiment e : cfg.experiments)
      for (FeatureGroup g : feature_groups(e))
        if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
    const FeatureMatrix full = featurelab::build_matrix(builder, obs, groups);

    std::vector<CellResult> cells;
    for (Experiment e : cfg.experiments) {
      CellResult c;
      c.experiment = e;
      c.month = m;
      cells.push_back(std::move(c));
    }
    parallel_for(cells.size(), cfg.threads,
                 [&](std::size_t k) { detail::run_cell(cells[k], full, labels, tuning, cfg); });
    for (auto& c : cells) rep.cells.push_back(std::move(c));
  }
  compare(rep, cfg);
  return rep;
}

}  // namespace credyn::dynamics
