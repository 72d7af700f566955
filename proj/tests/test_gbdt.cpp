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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "credyn/gbdt.hpp"
#include "oracles.hpp"

using namespace credyn;
namespace gb = credyn::gbdt;

namespace {

struct Data {
  FeatureMatrix m;
  std::vector<int> y;
};

// Nonlinear signal over p features, a share of them noise, with missing cells.
Data synthetic(std::uint64_t seed, std::size_t n = 600, std::size_t p = 5, double missing = 0.05) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0, 1);
  Data d;
  for (std::size_t i = 0; i < n; ++i) d.m.row_ids.push_back("r" + std::to_string(i));
  for (std::size_t j = 0; j < p; ++j) d.m.columns.push_back({"x" + std::to_string(j), FeatureGroup::kFin, {}});
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(p);
    for (auto& v : row) v = z(rng);
    const double s = row[0] + (p > 1 ? row[1] * row[1] - 1 : 0.0) + (p > 2 ? 0.5 * (row[2] > 0.3) : 0.0);
    d.y.push_back(u(rng) < sigmoid(s));
    for (std::size_t j = 0; j < p; ++j)
      d.m.columns[j].values.push_back(u(rng) < missing ? kMissing : std::round(row[j] * 20) / 20);
  }
  return d;
}

std::vector<double> probas(const gb::BoostedModel& model, const FeatureMatrix& m) {
  auto v = gb::predict_margins(model, m);
  for (auto& x : v) x = sigmoid(x);
  return v;
}

}  // namespace

TEST(Train, ZeroLearningRateGivesBaseRate) {
  auto d = synthetic(1);
  gb::HyperParams p;
  p.n_trees = 10;
  p.learning_rate = 0;
  const auto model = gb::train(d.m, d.y, p);
  double rate = 0;
  for (int y : d.y) rate += y;
  rate /= static_cast<double>(d.y.size());
  for (double pr : probas(model, d.m)) EXPECT_NEAR(pr, rate, 1e-12);
}

TEST(Train, EmptyTreeListPredictsBaseRate) {
  auto d = synthetic(2);
  gb::HyperParams p;
  p.n_trees = 0;
  const auto model = gb::train(d.m, d.y, p);
  EXPECT_TRUE(model.trees.empty());
  double rate = 0;
  for (int y : d.y) rate += y;
  EXPECT_NEAR(model.predict_proba(std::vector<double>(5, 0.0)),
              rate / static_cast<double>(d.y.size()), 1e-12);
}

TEST(Train, SeparableBinaryFeatureReachesAucOne) {
  FeatureMatrix m;
  std::vector<int> y;
  m.columns.push_back({"b", FeatureGroup::kFin, {}});
  for (int i = 0; i < 200; ++i) {
    m.row_ids.push_back(std::to_string(i));
    y.push_back(i % 3 == 0);
    m.columns[0].values.push_back(i % 3 == 0 ? 1.0 : 0.0);
  }
  gb::HyperParams p;
  p.n_trees = 50;
  const auto model = gb::train(m, y, p);
  EXPECT_EQ(oracle::pairwise_auc(gb::predict_margins(model, m), y), 1.0);
}

TEST(Train, LoglossNonIncreasingOnSeededDatasets) {
  for (int s = 0; s < 20; ++s) {
    auto d = synthetic(100 + s, 300);
    gb::HyperParams p;
    p.n_trees = 30;
    p.min_data_in_leaf = 5 + s;
    std::vector<double> trace;
    gb::train(d.m, d.y, p, {&trace});
    ASSERT_EQ(trace.size(), 31u);
    for (std::size_t t = 1; t < trace.size(); ++t) EXPECT_LE(trace[t], trace[t - 1] + 1e-12) << s;
  }
}

TEST(Train, TraceMatchesDirectLogloss) {
  auto d = synthetic(7, 300);
  gb::HyperParams p;
  p.n_trees = 5;
  std::vector<double> trace;
  const auto model = gb::train(d.m, d.y, p, {&trace});
  double ll = 0;
  const auto pr = probas(model, d.m);
  for (std::size_t i = 0; i < pr.size(); ++i) ll -= d.y[i] ? std::log(pr[i]) : std::log(1 - pr[i]);
  EXPECT_NEAR(trace.back(), ll / static_cast<double>(pr.size()), 1e-12);
}

TEST(Train, LeafWeightsAreNewtonSteps) {
  auto d = synthetic(8, 400);
  gb::HyperParams p;
  p.n_trees = 2;
  p.max_depth = 2;
  p.l2_leaf_reg = 1.5;
  const auto model = gb::train(d.m, d.y, p);
  // Recompute the second tree's leaf weights from gradients after tree one.
  const auto x = gb::DenseMatrix::from(d.m);
  const auto& t0 = model.trees[0];
  const auto& t1 = model.trees[1];
  std::vector<double> G(t1.nodes.size()), H(t1.nodes.size());
  for (std::size_t i = 0; i < x.rows; ++i) {
    const auto row = x.row(i);
    const double pr = sigmoid(model.base_score + p.learning_rate * t0.predict(row));
    const int leaf = t1.leaf_index([&](int f) { return row[static_cast<std::size_t>(f)]; });
    G[static_cast<std::size_t>(leaf)] += pr - d.y[i];
    H[static_cast<std::size_t>(leaf)] += pr * (1 - pr);
  }
  for (std::size_t k = 0; k < t1.nodes.size(); ++k)
    if (t1.nodes[k].is_leaf()) { EXPECT_NEAR(t1.nodes[k].weight, -G[k] / (H[k] + p.l2_leaf_reg), 1e-12); }
}

TEST(Train, DepthZeroIsSingleLeaf) {
  auto d = synthetic(9, 300);
  gb::HyperParams p;
  p.n_trees = 3;
  p.max_depth = 0;
  const auto model = gb::train(d.m, d.y, p);
  for (const auto& t : model.trees) ASSERT_EQ(t.nodes.size(), 1u);
  // Base score is the label log-odds, so the first gradient sum is zero.
  EXPECT_NEAR(model.trees[0].nodes[0].weight, 0.0, 1e-12);
}

TEST(Train, StructuralInvariants) {
  for (int ml : {1, 10, 40}) {
    auto d = synthetic(10 + ml, 500);
    gb::HyperParams p;
    p.n_trees = 10;
    p.max_depth = 4;
    p.min_data_in_leaf = ml;
    const auto model = gb::train(d.m, d.y, p);
    for (const auto& t : model.trees) {
      EXPECT_LE(t.depth(), 4);
      for (const auto& n : t.nodes)
        if (n.is_leaf()) { EXPECT_GE(n.cover, ml); }
    }
  }
}

TEST(Train, ConstantColumnChangesNothing) {
  auto d = synthetic(12, 400);
  gb::HyperParams p;
  p.n_trees = 20;
  const auto base = gb::train(d.m, d.y, p);
  FeatureMatrix wide = d.m;
  wide.columns.insert(wide.columns.begin(), {"const", FeatureGroup::kFin, std::vector<double>(400, 3.0)});
  const auto with = gb::train(wide, d.y, p);
  const auto a = gb::predict_margins(base, d.m), b = gb::predict_margins(with, wide);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(Train, Deterministic) {
  auto d = synthetic(13);
  gb::HyperParams p;
  p.n_trees = 15;
  EXPECT_EQ(gb::train(d.m, d.y, p), gb::train(d.m, d.y, p));
}

TEST(Train, InputErrors) {
  auto d = synthetic(14, 50);
  std::vector<int> ones(50, 1);
  EXPECT_THROW(gb::train(d.m, ones, {}), TrainingError);
  FeatureMatrix empty;
  EXPECT_THROW(gb::train(empty, std::vector<int>{}, {}), Error);
  gb::HyperParams bad;
  bad.min_data_in_leaf = 0;
  try {
    gb::train(d.m, d.y, bad);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "min_data_in_leaf");
  }
}

TEST(Predict, AllMissingRowFollowsDefaults) {
  auto d = synthetic(15, 500, 4, 0.2);
  gb::HyperParams p;
  p.n_trees = 10;
  const auto model = gb::train(d.m, d.y, p);
  const std::vector<double> row(4, kMissing);
  const double a = model.predict_margin(row);
  EXPECT_TRUE(std::isfinite(a));
  EXPECT_EQ(a, model.predict_margin(row));
  EXPECT_NEAR(model.predict_proba(row), sigmoid(a), 1e-12);
  EXPECT_THROW(model.predict_margin(std::vector<double>(3, 0.0)), SchemaError);
}

TEST(Predict, MatrixBindsColumnsByName) {
  auto d = synthetic(16, 300);
  const auto model = gb::train(d.m, d.y, {});
  FeatureMatrix shuffled = d.m;
  std::reverse(shuffled.columns.begin(), shuffled.columns.end());
  EXPECT_EQ(gb::predict_margins(model, d.m), gb::predict_margins(model, shuffled));
  shuffled.columns.pop_back();
  EXPECT_THROW(gb::predict_margins(model, shuffled), SchemaError);
}

TEST(Serialize, RoundTripPredictsIdentically) {
  auto d = synthetic(17, 800, 6, 0.1);
  gb::HyperParams p;
  p.n_trees = 40;
  const auto model = gb::train(d.m, d.y, p);
  const auto back = gb::from_text(gb::to_text(model));
  EXPECT_EQ(back, model);
  std::mt19937_64 rng(99);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0, 1);
  for (int r = 0; r < 1000; ++r) {
    std::vector<double> row(6);
    for (auto& v : row) v = u(rng) < 0.1 ? kMissing : z(rng);
    EXPECT_EQ(model.predict_margin(row), back.predict_margin(row));
  }
}

TEST(Serialize, MalformedInputReportsLine) {
  auto d = synthetic(18, 100);
  gb::HyperParams p;
  p.n_trees = 1;
  auto text = gb::to_text(gb::train(d.m, d.y, p));
  text.replace(text.find("base_score"), 10, "base_scorx");
  try {
    gb::from_text(text);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 8"), std::string::npos) << e.what();
  }
  EXPECT_THROW(gb::from_text("credyn_boosted_model 2\n"), ParseError);
}

TEST(Grid, SinglePointReturnsIt) {
  auto d = synthetic(19, 300);
  gb::GridSpec g;
  g.n_trees_choices = {7};
  g.learning_rate_choices = {0.2};
  g.min_data_in_leaf_choices = {11};
  const auto r = gb::grid_search(d.m, d.y, g, 3, 1);
  EXPECT_EQ(r.best.n_trees, 7);
  EXPECT_EQ(r.best.learning_rate, 0.2);
  EXPECT_EQ(r.best.min_data_in_leaf, 11);
  ASSERT_EQ(r.table.size(), 1u);
}

TEST(Grid, TieGoesToFewerTrees) {
  FeatureMatrix m;
  std::vector<int> y;
  m.columns.push_back({"b", FeatureGroup::kFin, {}});
  for (int i = 0; i < 300; ++i) {
    m.row_ids.push_back("id" + std::to_string(i));
    y.push_back(i % 2);
    m.columns[0].values.push_back(i % 2);
  }
  gb::GridSpec g;
  g.n_trees_choices = {40, 10, 20};
  g.learning_rate_choices = {0.1};
  g.min_data_in_leaf_choices = {5};
  const auto r = gb::grid_search(m, y, g, 3, 4);
  for (const auto& gp : r.table) EXPECT_EQ(gp.mean_auc, 1.0);
  EXPECT_EQ(r.best.n_trees, 10);
}

TEST(Grid, BestAttainsTableMaximum) {
  auto d = synthetic(20, 500);
  gb::GridSpec g;
  g.n_trees_choices = {5, 15};
  g.learning_rate_choices = {0.05, 0.3};
  g.min_data_in_leaf_choices = {5, 60};
  const auto r = gb::grid_search(d.m, d.y, g, 3, 2);
  ASSERT_EQ(r.table.size(), 8u);
  double mx = -1;
  for (const auto& gp : r.table) {
    ASSERT_TRUE(gp.ok);
    mx = std::max(mx, gp.mean_auc);
  }
  bool found = false;
  for (const auto& gp : r.table)
    if (gp.params == r.best) {
      EXPECT_EQ(gp.mean_auc, mx);
      found = true;
    }
  EXPECT_TRUE(found);
}

TEST(Grid, PrefixScoresMatchDirectTraining) {
  auto d = synthetic(21, 400);
  gb::GridSpec g;
  g.n_trees_choices = {4, 9};
  g.learning_rate_choices = {0.1};
  g.min_data_in_leaf_choices = {10};
  const auto folds = evalkit::make_folds(d.m.row_ids, 3, 5);
  const auto r = gb::grid_search(d.m, d.y, g, folds, 3);
  for (const auto& gp : r.table) {
    double sum = 0;
    for (int f = 0; f < 3; ++f) {
      std::vector<std::size_t> tr, te;
      for (std::size_t i = 0; i < d.y.size(); ++i) (folds[i] == f ? te : tr).push_back(i);
      std::vector<int> ytr, yte;
      for (auto i : tr) ytr.push_back(d.y[i]);
      for (auto i : te) yte.push_back(d.y[i]);
      const auto model = gb::train(d.m.select_rows(tr), ytr, gp.params);
      sum += oracle::pairwise_auc(gb::predict_margins(model, d.m.select_rows(te)), yte);
    }
    EXPECT_NEAR(gp.mean_auc, sum / 3, 1e-12);
  }
}
