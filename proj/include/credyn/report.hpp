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

#include <filesystem>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "credyn/dynamics.hpp"
#include "credyn/io.hpp"

namespace credyn::report {

using Json = nlohmann::ordered_json;

namespace detail {

inline Json real(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json params(const gbdt::HyperParams& p) {
  return Json{{"n_trees", p.n_trees},
              {"learning_rate", p.learning_rate},
              {"min_data_in_leaf", p.min_data_in_leaf},
              {"max_depth", p.max_depth},
              {"l2_leaf_reg", p.l2_leaf_reg}};
}

inline Json test(const evalkit::ComparisonResult& r) {
  return Json{{"a_mean", real(r.a_mean)},
              {"b_mean", real(r.b_mean)},
              {"delta_mean", real(r.delta_mean)},
              {"relative_increment", real(r.relative_increment)},
              {"increment_defined", r.increment_defined},
              {"t_statistic", real(r.t_statistic)},
              {"p_value", real(r.p_value)},
              {"significant", r.significant}};
}

inline Json comparison(const dynamics::Comparison& c) {
  return Json{{"kind", c.kind},
              {"base_experiment", dynamics::to_string(c.base_experiment)},
              {"base_month", c.base_month},
              {"other_experiment", dynamics::to_string(c.other_experiment)},
              {"other_month", c.other_month},
              {"ok", c.ok},
              {"note", c.note},
              {"ks", test(c.ks)},
              {"auc", test(c.auc)}};
}

inline std::string csv_real(double v) { return io::format_double(v); }

}  // namespace detail

inline Json to_json(const dynamics::ExperimentReport& rep) {
  using detail::real;
  Json j;
  j["format"] = "credyn_experiment_report 1";
  Json snaps = Json::array();
  for (const auto& s : rep.snapshots)
    snaps.push_back({{"month", s.month}, {"rows", s.rows}, {"default_rate", real(s.default_rate)}});
  j["snapshots"] = snaps;

  Json cells = Json::array();
  for (const auto& c : rep.cells) {
    Json cj{{"experiment", dynamics::to_string(c.experiment)},
            {"month", c.month},
            {"ok", c.ok},
            {"error", c.error},
            {"n_tuning", c.n_tuning},
            {"n_training", c.n_training},
            {"default_rate", real(c.default_rate)},
            {"screened", c.screened},
            {"selected", c.selected},
            {"params", detail::params(c.params)}};
    Json grid = Json::array();
    for (const auto& g : c.grid)
      grid.push_back({{"params", detail::params(g.params)}, {"mean_auc", real(g.mean_auc)}, {"ok", g.ok},
                      {"error", g.error}});
    cj["grid"] = grid;
    Json folds = Json::array();
    for (const auto& f : c.cv.folds) folds.push_back({{"ks", real(f.ks)}, {"auc", real(f.auc)}});
    cj["folds"] = folds;
    cj["ks_mean"] = real(c.cv.ks_mean);
    cj["ks_sd"] = real(c.cv.ks_sd);
    cj["auc_mean"] = real(c.cv.auc_mean);
    cj["auc_sd"] = real(c.cv.auc_sd);
    cj["fold_assignment_id"] = c.cv.fold_assignment_id;
    Json imp = Json::array();
    for (std::size_t f = 0; f < c.importance.size(); ++f)
      imp.push_back({{"fold", f},
                     {"borrower_share", real(c.importance[f].borrower_share)},
                     {"network_share", real(c.importance[f].network_share)},
                     {"defined", c.importance[f].defined}});
    cj["importance"] = imp;
    cells.push_back(std::move(cj));
  }
  j["cells"] = cells;

  Json cons = Json::array(), betw = Json::array();
  for (const auto& c : rep.consecutive) cons.push_back(detail::comparison(c));
  for (const auto& c : rep.between) betw.push_back(detail::comparison(c));
  j["consecutive"] = cons;
  j["between_experiments"] = betw;

  Json trend = Json::array();
  for (std::size_t i = 0; i < rep.importance_month.size(); ++i)
    trend.push_back({{"month", rep.importance_month[i]},
                     {"fold", rep.importance_fold[i]},
                     {"network_share", real(rep.importance_network_share[i])},
                     {"lowess", i < rep.importance_lowess.size() ? real(rep.importance_lowess[i]) : Json(nullptr)}});
  j["importance_trend"] = trend;

  Json overlay = Json::array();
  for (std::size_t i = 0; i < rep.overlay_month.size(); ++i)
    overlay.push_back({{"month", rep.overlay_month[i]},
                       {"ks_increment", real(rep.overlay_ks_increment[i])},
                       {"auc_increment", real(rep.overlay_auc_increment[i])},
                       {"network_share", real(rep.overlay_network_share[i])},
                       {"ks_scaled", real(rep.overlay_ks_scaled[i])},
                       {"auc_scaled", real(rep.overlay_auc_scaled[i])},
                       {"network_scaled", real(rep.overlay_network_scaled[i])}});
  j["overlay"] = overlay;
  return j;
}

// fig3: per experiment and month, CV summary plus the change from the
// previous month.
inline void write_fig3(std::ostream& o, const dynamics::ExperimentReport& rep) {
  using detail::csv_real;
  o << "experiment,month,ok,ks_mean,ks_sd,auc_mean,auc_sd,ks_increment,ks_p_value,ks_significant,"
       "auc_increment,auc_p_value,auc_significant\n";
  for (const auto& c : rep.cells) {
    o << dynamics::to_string(c.experiment) << ',' << c.month << ',' << (c.ok ? 1 : 0) << ',';
    if (c.ok)
      o << csv_real(c.cv.ks_mean) << ',' << csv_real(c.cv.ks_sd) << ',' << csv_real(c.cv.auc_mean) << ','
        << csv_real(c.cv.auc_sd);
    else
      o << ",,,";
    const auto* prev = [&]() -> const dynamics::Comparison* {
      for (const auto& k : rep.consecutive)
        if (k.base_experiment == c.experiment && k.other_month == c.month) return &k;
      return nullptr;
    }();
    if (prev && prev->ok)
      o << ',' << csv_real(prev->ks.relative_increment) << ',' << csv_real(prev->ks.p_value) << ','
        << (prev->ks.significant ? 1 : 0) << ',' << csv_real(prev->auc.relative_increment) << ','
        << csv_real(prev->auc.p_value) << ',' << (prev->auc.significant ? 1 : 0);
    else
      o << ",,,,,,";
    o << '\n';
  }
}

// fig4 / fig5: per month, the increment of `other` over `base`.
inline void write_experiment_comparison(std::ostream& o, const dynamics::ExperimentReport& rep,
                                        dynamics::Experiment base, dynamics::Experiment other) {
  using detail::csv_real;
  o << "month,ok,ks_base,ks_other,ks_increment,ks_t,ks_p_value,ks_significant,auc_base,auc_other,"
       "auc_increment,auc_t,auc_p_value,auc_significant\n";
  for (const auto& c : rep.between) {
    if (c.base_experiment != base || c.other_experiment != other) continue;
    o << c.base_month << ',' << (c.ok ? 1 : 0);
    for (const auto* t : {&c.ks, &c.auc}) {
      if (c.ok)
        o << ',' << csv_real(t->a_mean) << ',' << csv_real(t->b_mean) << ',' << csv_real(t->relative_increment)
          << ',' << csv_real(t->t_statistic) << ',' << csv_real(t->p_value) << ',' << (t->significant ? 1 : 0);
      else
        o << ",,,,,,";
    }
    o << '\n';
  }
}

inline void write_fig6(std::ostream& o, const dynamics::ExperimentReport& rep) {
  using detail::csv_real;
  o << "month,fold,borrower_share,network_share,lowess\n";
  for (std::size_t i = 0; i < rep.importance_month.size(); ++i) {
    const double share = rep.importance_network_share[i];
    o << rep.importance_month[i] << ',' << rep.importance_fold[i] << ',' << csv_real(1.0 - share) << ','
      << csv_real(share) << ',' << (i < rep.importance_lowess.size() ? csv_real(rep.importance_lowess[i]) : "")
      << '\n';
  }
}

inline void write_fig7(std::ostream& o, const dynamics::ExperimentReport& rep) {
  using detail::csv_real;
  o << "month,ks_increment,auc_increment,network_share,ks_scaled,auc_scaled,network_scaled\n";
  for (std::size_t i = 0; i < rep.overlay_month.size(); ++i)
    o << rep.overlay_month[i] << ',' << csv_real(rep.overlay_ks_increment[i]) << ','
      << csv_real(rep.overlay_auc_increment[i]) << ',' << csv_real(rep.overlay_network_share[i]) << ','
      << csv_real(rep.overlay_ks_scaled[i]) << ',' << csv_real(rep.overlay_auc_scaled[i]) << ','
      << csv_real(rep.overlay_network_scaled[i]) << '\n';
}

// Per-fold group importance: experiment, month, fold, shares.
inline void write_importance_header(std::ostream& o) {
  o << "experiment,month,fold,borrower_share,network_share\n";
}

inline void write_importance_row(std::ostream& o, std::string_view experiment, int month, int fold,
                                 const shap::GroupImportance& g) {
  o << experiment << ',' << month << ',' << fold << ',' << detail::csv_real(g.borrower_share) << ','
    << detail::csv_real(g.network_share) << '\n';
}

inline void write_importance(std::ostream& o, const dynamics::ExperimentReport& rep) {
  write_importance_header(o);
  for (const auto& c : rep.cells)
    for (std::size_t f = 0; f < c.importance.size(); ++f)
      write_importance_row(o, dynamics::to_string(c.experiment), c.month, static_cast<int>(f), c.importance[f]);
}

// Writes report.json and every figure CSV into `dir`.
inline void write_all(const std::filesystem::path& dir, const dynamics::ExperimentReport& rep) {
  io::atomic_write(dir / "report.json", to_json(rep).dump(2) + "\n");
  io::atomic_write(dir / "fig3_performance.csv", [&](std::ostream& o) { write_fig3(o, rep); });
  io::atomic_write(dir / "fig4_e2_vs_e1.csv", [&](std::ostream& o) {
    write_experiment_comparison(o, rep, dynamics::Experiment::kE1, dynamics::Experiment::kE2);
  });
  io::atomic_write(dir / "fig5_e3_vs_e2.csv", [&](std::ostream& o) {
    write_experiment_comparison(o, rep, dynamics::Experiment::kE2, dynamics::Experiment::kE3);
  });
  io::atomic_write(dir / "fig6_importance.csv", [&](std::ostream& o) { write_fig6(o, rep); });
  io::atomic_write(dir / "fig7_overlay.csv", [&](std::ostream& o) { write_fig7(o, rep); });
  io::atomic_write(dir / "importance.csv", [&](std::ostream& o) { write_importance(o, rep); });
}

}  // namespace credyn::report
