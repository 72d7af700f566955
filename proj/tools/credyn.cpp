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

// credyn: command-line driver for the population generator, feature
// extraction, the monthly study and SHAP group importance.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "credyn/credyn.hpp"

namespace fs = std::filesystem;
using namespace credyn;

namespace {

struct RunConfig {
  fs::path out = "credyn_out";
  std::optional<fs::path> data;  // input directory; defaults to out
  std::optional<fs::path> panel, cohort, eownet, familynet;
  std::uint64_t seed = 42;
  std::size_t threads = default_threads();
  synthpop::PopulationConfig population;
  featselect::SelectionConfig selection;
  gbdt::GridSpec grid;
  std::vector<std::string> experiments{"E1", "E2", "E3"};
  int first_month = 1;
  int last_month = 12;
  double tuning_fraction = 0.3;
  int cv_folds = 10;
  int tuning_folds = 3;
  std::size_t shap_sample_max = 2000;
  double lowess_frac = 0.5;
  std::vector<int> windows{3, 6};
  bool save_models = false;
  // explain
  fs::path model;
  fs::path features;
  std::string explain_experiment = "E3";
  int explain_month = 1;
  int explain_fold = 0;
};

fs::path input_dir(const RunConfig& c) { return c.data ? *c.data : c.out; }

fs::path panel_path(const RunConfig& c) { return c.panel ? *c.panel : input_dir(c) / "panel.csv"; }
fs::path cohort_path(const RunConfig& c) { return c.cohort ? *c.cohort : input_dir(c) / "cohort.csv"; }

fs::path network_edges(const RunConfig& c, const std::optional<fs::path>& given, const std::string& stem) {
  return given ? *given : input_dir(c) / (stem + "_edges.csv");
}

// Node lists sit next to edge files ("x_edges.csv" -> "x_nodes.csv"); they
// are optional.
std::optional<fs::path> nodes_for(const fs::path& edges) {
  auto name = edges.filename().string();
  const auto pos = name.rfind("_edges.csv");
  if (pos == std::string::npos) return std::nullopt;
  auto p = edges.parent_path() / (name.substr(0, pos) + "_nodes.csv");
  if (!fs::exists(p)) return std::nullopt;
  return p;
}

struct Inputs {
  BorrowerPanel panel;
  SocialGraph eownet, familynet;
};

Inputs load_inputs(const RunConfig& c) {
  Inputs in;
  const auto pp = panel_path(c), cp = cohort_path(c);
  if (!fs::exists(pp)) throw Error("missing input file: " + pp.string());
  if (!fs::exists(cp)) throw Error("missing input file: " + cp.string());
  in.panel = io::read_panel(pp, cp);
  const auto ep = network_edges(c, c.eownet, "eownet");
  const auto fp = network_edges(c, c.familynet, "familynet");
  in.eownet = io::read_graph("EOWNet", ep, nodes_for(ep), &in.panel);
  in.familynet = io::read_graph("FamilyNet", fp, nodes_for(fp), &in.panel);
  return in;
}

dynamics::StudyConfig study_config(const RunConfig& c) {
  dynamics::StudyConfig s;
  s.experiments.clear();
  for (const auto& e : c.experiments) {
    const auto x = dynamics::parse_experiment(e);
    if (!x) throw ConfigError("experiments", "unknown experiment '" + e + "'");
    s.experiments.push_back(*x);
  }
  s.first_month = c.first_month;
  s.last_month = c.last_month;
  s.tuning_fraction = c.tuning_fraction;
  s.cv_folds = c.cv_folds;
  s.tuning_folds = c.tuning_folds;
  s.selection = c.selection;
  s.grid = c.grid;
  s.seed = c.seed;
  s.shap_sample_max = c.shap_sample_max;
  s.lowess_frac = c.lowess_frac;
  s.threads = c.threads;
  s.keep_models = c.save_models;
  s.validate();
  return s;
}

featurelab::FeatureOptions feature_options(const RunConfig& c) {
  featurelab::FeatureOptions f;
  f.windows = c.windows;
  f.threads = c.threads;
  for (int w : f.windows)
    if (w < 1) throw ConfigError("windows", "window lengths must be positive");
  return f;
}

std::string month_tag(int m) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d", m);
  return buf;
}

void cmd_generate(RunConfig c) {
  c.population.seed = c.seed;
  const auto pop = synthpop::generate_population(c.population);
  io::atomic_write(c.out / "panel.csv", [&](std::ostream& o) { io::write_panel(o, pop.panel); });
  io::atomic_write(c.out / "cohort.csv", [&](std::ostream& o) { io::write_cohort(o, pop.panel); });
  io::atomic_write(c.out / "eownet_edges.csv", [&](std::ostream& o) { io::write_edges(o, pop.eownet); });
  io::atomic_write(c.out / "eownet_nodes.csv", [&](std::ostream& o) { io::write_nodes(o, pop.eownet); });
  io::atomic_write(c.out / "familynet_edges.csv", [&](std::ostream& o) { io::write_edges(o, pop.familynet); });
  io::atomic_write(c.out / "familynet_nodes.csv", [&](std::ostream& o) { io::write_nodes(o, pop.familynet); });
}

void cmd_features(const RunConfig& c) {
  const auto in = load_inputs(c);
  const auto snaps = dynamics::build_snapshots(in.panel, c.last_month);
  const featurelab::FeatureBuilder builder(in.panel, {&in.eownet, &in.familynet}, feature_options(c));
  for (const SocialGraph* g : {&in.eownet, &in.familynet}) {
    std::string stem = g->name();
    for (auto& ch : stem) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    io::atomic_write(c.out / ("node_stats_" + stem + ".csv"), [&](std::ostream& o) {
      io::write_node_stats_header(o);
      for (int m = 1; m <= in.panel.horizon(); ++m) {
        const auto sl = slice(*g, m);
        io::write_node_stats_rows(o, sl, m, graphstats::node_stats(sl));
      }
    });
  }
  for (const auto& s : snaps) {
    if (s.month_since_grant < c.first_month) continue;
    std::vector<featurelab::Observation> obs;
    std::vector<int> labels;
    for (const auto& r : s.rows) {
      obs.push_back({r.record, r.observation_month, r.history_start});
      labels.push_back(r.label);
    }
    const auto m = featurelab::build_matrix(builder, obs, {kAllGroups.begin(), kAllGroups.end()});
    io::atomic_write(c.out / "features" / ("month_" + month_tag(s.month_since_grant) + ".csv"),
                     [&](std::ostream& o) { io::write_feature_matrix(o, m, labels); });
  }
}

void cmd_study(const RunConfig& c) {
  const auto sc = study_config(c);
  const auto in = load_inputs(c);
  const auto snaps = dynamics::build_snapshots(in.panel, sc.last_month);
  const featurelab::FeatureBuilder builder(in.panel, {&in.eownet, &in.familynet}, feature_options(c));
  const auto rep = dynamics::run_study(builder, snaps, sc);
  report::write_all(c.out, rep);
  if (c.save_models)
    for (const auto& cell : rep.cells)
      for (std::size_t f = 0; f < cell.models.size(); ++f)
        io::atomic_write(c.out / "models" /
                             (std::string(dynamics::to_string(cell.experiment)) + "_m" + month_tag(cell.month) +
                              "_f" + month_tag(static_cast<int>(f)) + ".model"),
                         gbdt::to_text(cell.models[f]));
}

void cmd_explain(const RunConfig& c) {
  if (c.model.empty()) throw ConfigError("model", "a model path is required");
  if (c.features.empty()) throw ConfigError("features", "a feature matrix path is required");
  if (!fs::exists(c.model)) throw Error("missing input file: " + c.model.string());
  std::ifstream model_in(c.model);
  const auto model = gbdt::read_model(model_in);
  const auto lm = io::read_feature_matrix(c.features);
  std::vector<std::size_t> all(lm.matrix.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto sample = dynamics::explanation_sample(all, lm.matrix.row_ids, c.shap_sample_max, c.seed);
  const auto m = lm.matrix.select_rows(sample).select_columns(model.columns);
  std::vector<FeatureGroup> groups;
  for (const auto& col : m.columns) groups.push_back(col.group);
  const auto g = shap::group_importance(model, gbdt::DenseMatrix::from(m), groups);
  io::atomic_write(c.out / "explain_importance.csv", [&](std::ostream& o) {
    report::write_importance_header(o);
    report::write_importance_row(o, c.explain_experiment, c.explain_month, c.explain_fold, g);
  });
}

// Environment overrides sit between the command line and the config file.
void apply_env(RunConfig& c, const CLI::App& app) {
  if (const char* s = std::getenv("CREDYN_SEED"); s && app.get_option("--seed")->count() == 0) {
    try {
      std::size_t used = 0;
      c.seed = std::stoull(s, &used);
      if (used != std::string(s).size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw ConfigError("CREDYN_SEED", "not an unsigned integer");
    }
  }
  if (const char* s = std::getenv("CREDYN_OUT"); s && app.get_option("--out")->count() == 0) c.out = s;
}

std::string one_line(std::string s) {
  for (auto& ch : s)
    if (ch == '\n' || ch == '\r') ch = ' ';
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig c;
  CLI::App app{"credyn: behavioral credit scoring study over borrower panels and social networks"};
  app.set_config("--config", "", "TOML config file; keys are the long option names");
  app.require_subcommand(1);

  app.add_option("--seed", c.seed, "Random seed (env CREDYN_SEED)")->capture_default_str();
  app.add_option("--threads", c.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--out", c.out, "Output directory (env CREDYN_OUT)")->capture_default_str();
  app.add_option("--data", c.data, "Input directory (default: --out)");
  app.add_option("--panel", c.panel, "Panel CSV (default: <data>/panel.csv)");
  app.add_option("--cohort", c.cohort, "Cohort CSV (default: <data>/cohort.csv)");
  app.add_option("--eownet", c.eownet, "EOWNet edge list (default: <data>/eownet_edges.csv)");
  app.add_option("--familynet", c.familynet, "FamilyNet edge list (default: <data>/familynet_edges.csv)");

  auto& p = c.population;
  app.add_option("--n_persons", p.n_persons)->capture_default_str()->group("Population");
  app.add_option("--n_companies", p.n_companies)->capture_default_str()->group("Population");
  app.add_option("--cohort_persons", p.cohort_persons)->capture_default_str()->group("Population");
  app.add_option("--cohort_companies", p.cohort_companies)->capture_default_str()->group("Population");
  app.add_option("--horizon_months", p.horizon_months)->capture_default_str()->group("Population");
  app.add_option("--homophily_strength", p.homophily_strength)->capture_default_str()->group("Population");
  app.add_option("--base_hazard_person", p.base_hazard_person)->capture_default_str()->group("Population");
  app.add_option("--base_hazard_company", p.base_hazard_company)->capture_default_str()->group("Population");
  app.add_option("--loan_term_min", p.loan_term_min)->capture_default_str()->group("Population");
  app.add_option("--loan_term_max", p.loan_term_max)->capture_default_str()->group("Population");
  app.add_option("--origination_window", p.origination_window)->capture_default_str()->group("Population");
  app.add_option("--risk_slope", p.risk_slope)->capture_default_str()->group("Population");
  app.add_option("--roll_probability", p.roll_probability)->capture_default_str()->group("Population");
  app.add_option("--cure_probability", p.cure_probability)->capture_default_str()->group("Population");

  app.add_option("--ks_min", c.selection.ks_min)->capture_default_str()->group("Selection");
  app.add_option("--auc_min", c.selection.auc_min)->capture_default_str()->group("Selection");
  app.add_option("--rho", c.selection.rho)->capture_default_str()->group("Selection");
  app.add_option("--min_pairwise_rows", c.selection.min_pairwise_rows)->capture_default_str()->group("Selection");

  app.add_option("--n_trees_choices", c.grid.n_trees_choices)->capture_default_str()->group("Grid");
  app.add_option("--learning_rate_choices", c.grid.learning_rate_choices)->capture_default_str()->group("Grid");
  app.add_option("--min_data_in_leaf_choices", c.grid.min_data_in_leaf_choices)
      ->capture_default_str()
      ->group("Grid");
  app.add_option("--max_depth", c.grid.max_depth)->capture_default_str()->group("Grid");
  app.add_option("--l2_leaf_reg", c.grid.l2_leaf_reg)->capture_default_str()->group("Grid");

  app.add_option("--experiments", c.experiments)->capture_default_str()->group("Study");
  app.add_option("--first_month", c.first_month)->capture_default_str()->group("Study");
  app.add_option("--last_month", c.last_month)->capture_default_str()->group("Study");
  app.add_option("--tuning_fraction", c.tuning_fraction)->capture_default_str()->group("Study");
  app.add_option("--cv_folds", c.cv_folds)->capture_default_str()->group("Study");
  app.add_option("--tuning_folds", c.tuning_folds)->capture_default_str()->group("Study");
  app.add_option("--shap_sample_max", c.shap_sample_max)->capture_default_str()->group("Study");
  app.add_option("--lowess_frac", c.lowess_frac)->capture_default_str()->group("Study");
  app.add_option("--windows", c.windows)->capture_default_str()->group("Study");

  auto* gen = app.add_subcommand("generate", "Write a synthetic panel, cohort and both networks");
  auto* feat = app.add_subcommand("features", "Write node statistics and per-month feature matrices");
  auto* study = app.add_subcommand("study", "Run E1/E2/E3 over all months and write the report");
  study->add_flag("--save_models", c.save_models, "Also write every per-fold model");
  auto* explain = app.add_subcommand("explain", "SHAP group importance of a saved model");
  explain->add_option("--model", c.model, "Model file written by study --save_models")->required();
  explain->add_option("--features", c.features, "Feature matrix CSV written by features")->required();
  explain->add_option("--experiment", c.explain_experiment, "Experiment tag for the output row")
      ->capture_default_str();
  explain->add_option("--month", c.explain_month, "Month tag for the output row")->capture_default_str();
  explain->add_option("--fold", c.explain_fold, "Fold tag for the output row")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    apply_env(c, app);
    c.population.validate();
    if (*gen) cmd_generate(c);
    if (*feat) cmd_features(c);
    if (*study) cmd_study(c);
    if (*explain) cmd_explain(c);
  } catch (const std::exception& e) {
    std::cerr << "error: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 0;
}
