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
#include <set>

#include "credyn/featurelab.hpp"

using namespace credyn;
namespace fl = credyn::featurelab;

namespace {

MonthlyFinancialState state(int month, double consumer, double commercial = 0, double mortgage = 0,
                            double revolving = 0, DpdBucket b = DpdBucket::kCurrent) {
  MonthlyFinancialState s;
  s.month = month;
  s.debt_consumer = consumer;
  s.debt_commercial = commercial;
  s.debt_mortgage = mortgage;
  s.revolving_amount = revolving;
  s.dpd_bucket = b;
  s.has_active_loan = consumer + commercial + mortgage > 0;
  return s;
}

std::size_t col(const std::vector<std::string>& names, const std::string& n) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == n) return i;
  ADD_FAILURE() << "no column " << n;
  return 0;
}

// Borrower B with two family neighbors and one employer reachable only from
// month 4 on.
struct Fixture {
  BorrowerPanel panel{6};
  SocialGraph family{"FamilyNet"};
  SocialGraph eow{"EOWNet"};
  std::size_t b, n1, n2, co, loner;

  Fixture() {
    b = panel.add_borrower("B", NodeKind::kPerson);
    n1 = panel.add_borrower("N1", NodeKind::kPerson);
    n2 = panel.add_borrower("N2", NodeKind::kPerson);
    co = panel.add_borrower("C", NodeKind::kCompany);
    loner = panel.add_borrower("L", NodeKind::kPerson);
    for (int m = 1; m <= 6; ++m) {
      panel.set_state(b, state(m, 10.0 * m));
      panel.set_state(n1, state(m, 10));
      panel.set_state(n2, state(m, 20));
      panel.set_state(co, state(m, 0, 6.0 * m + 6.0));
      panel.set_state(loner, state(m, 5));
    }
    for (const char* id : {"B", "N1", "N2", "L"}) family.add_node(id, NodeKind::kPerson);
    family.add_edge({0, 1, EdgeType::kMarriage, {}, {}});
    family.add_edge({2, 0, EdgeType::kParentChild, {}, {}});
    eow.add_node("B", NodeKind::kPerson);
    eow.add_node("C", NodeKind::kCompany);
    eow.add_edge({0, 1, EdgeType::kEmployment, 4, 6});
  }
};

}  // namespace

TEST(FinFeatures, DebtsTotalsAndRatios) {
  const auto v = fl::fin_features(state(1, 100, 0, 0, 20));
  const auto names = fl::fin_names();
  EXPECT_EQ(v[col(names, "fin_totaldebt")], 100.0);
  EXPECT_EQ(v[col(names, "fin_revolving")], 20.0);
  EXPECT_EQ(v[col(names, "fin_ratio_consumer")], 1.0);
  EXPECT_EQ(v[col(names, "fin_ratio_commercial")], 0.0);
}

TEST(FinFeatures, ZeroDebtRatiosMissing) {
  const auto v = fl::fin_features(state(1, 0, 0, 0, 30));
  const auto names = fl::fin_names();
  EXPECT_TRUE(is_missing(v[col(names, "fin_ratio_consumer")]));
  EXPECT_TRUE(is_missing(v[col(names, "fin_ratio_commercial")]));
  EXPECT_TRUE(is_missing(v[col(names, "fin_ratio_mortgage")]));
}

TEST(FinFeatures, DpdOrdinalAndOneHot) {
  const auto v = fl::fin_features(state(1, 50, 0, 0, 0, DpdBucket::k30To59));
  const auto names = fl::fin_names();
  EXPECT_EQ(v[col(names, "fin_dpd_code")], 2.0);
  EXPECT_EQ(v[col(names, "fin_dpd_30_59")], 1.0);
  EXPECT_EQ(v[col(names, "fin_dpd_current")], 0.0);
  EXPECT_EQ(v[col(names, "fin_debt_delinquent")], 50.0);
}

TEST(FinFeatures, AbsentBorrowerIsError) {
  BorrowerPanel p(3);
  const auto r = p.add_borrower("X", NodeKind::kPerson);
  EXPECT_THROW(fl::fin_features(p, r, 2), Error);
}

TEST(FinHist, ConstantSeriesHasZeroSd) {
  BorrowerPanel p(6);
  const auto r = p.add_borrower("X", NodeKind::kPerson);
  for (int m = 1; m <= 6; ++m) p.set_state(r, state(m, 50));
  const auto v = fl::fin_hist_features(p, r, 6);
  const auto names = fl::fin_hist_names();
  EXPECT_EQ(v[col(names, "finhist_debt_consumer_mean3")], 50.0);
  EXPECT_EQ(v[col(names, "finhist_debt_consumer_sd3")], 0.0);
  EXPECT_EQ(v[col(names, "finhist_debt_consumer_sd6")], 0.0);
  EXPECT_EQ(v[col(names, "finhist_months_available")], 6.0);
}

TEST(FinHist, SinglePointWindowAtFirstMonth) {
  BorrowerPanel p(6);
  const auto r = p.add_borrower("X", NodeKind::kPerson);
  for (int m = 1; m <= 6; ++m) p.set_state(r, state(m, 7.0 * m));
  const auto v = fl::fin_hist_features(p, r, 1);
  const auto names = fl::fin_hist_names();
  EXPECT_EQ(v[col(names, "finhist_debt_consumer_mean6")], 7.0);
  EXPECT_EQ(v[col(names, "finhist_debt_consumer_sd6")], 0.0);
  EXPECT_EQ(v[col(names, "finhist_months_available")], 1.0);
}

TEST(FinHist, ThreeMonthPopulationSd) {
  BorrowerPanel p(6);
  const auto r = p.add_borrower("X", NodeKind::kPerson);
  for (int m = 1; m <= 3; ++m) p.set_state(r, state(m, 10.0 * m));
  const auto v = fl::fin_hist_features(p, r, 3);
  const auto names = fl::fin_hist_names();
  // Oracle: direct arithmetic on {10, 20, 30}.
  const double mean = (10 + 20 + 30) / 3.0;
  const double sd = std::sqrt(((10 - mean) * (10 - mean) + (20 - mean) * (20 - mean) + (30 - mean) * (30 - mean)) / 3);
  EXPECT_NEAR(v[col(names, "finhist_debt_consumer_mean3")], 20.0, 1e-12);
  EXPECT_NEAR(v[col(names, "finhist_debt_consumer_sd3")], sd, 1e-12);
  EXPECT_NEAR(sd, 8.16497, 1e-5);
}

TEST(FinHist, WindowClampsAtHistoryStart) {
  BorrowerPanel p(8);
  const auto r = p.add_borrower("X", NodeKind::kPerson);
  for (int m = 1; m <= 8; ++m) p.set_state(r, state(m, m < 4 ? 999 : 10));
  const auto v = fl::fin_hist_features(p, r, 5, 4);
  const auto names = fl::fin_hist_names();
  EXPECT_EQ(v[col(names, "finhist_debt_consumer_mean6")], 10.0);
  EXPECT_EQ(v[col(names, "finhist_months_available")], 2.0);
}

TEST(SocInt, NeighborMeanAndIsolatedNode) {
  Fixture f;
  const fl::FeatureBuilder fb(f.panel, {&f.family});
  const auto names = fl::socint_names();
  const auto v = fb.socint_features(f.b, 2);
  EXPECT_EQ(v[col(names, "socint_totaldebt_mean")], 15.0);
  EXPECT_EQ(v[col(names, "socint_totaldebt_sd")], 5.0);
  const auto lone = fb.socint_features(f.loner, 2);
  for (double x : lone) EXPECT_TRUE(is_missing(x));
  const auto ns = fb.node_stat_features(f.loner, 2);
  EXPECT_EQ(ns[0], 0.0);
}

TEST(SocInt, MissingForNodesOutsideNetwork) {
  Fixture f;
  const fl::FeatureBuilder fb(f.panel, {&f.eow, &f.family});
  const auto ns = fb.node_stat_features(f.n1, 5);  // N1 is not in EOWNet
  for (std::size_t i = 0; i < fl::kNodeStatNames.size(); ++i) EXPECT_TRUE(is_missing(ns[i]));
  EXPECT_FALSE(is_missing(ns[fl::kNodeStatNames.size()]));
}

TEST(SocInt, OneNeighborMeanIsExactNeighborValue) {
  Fixture f;
  const fl::FeatureBuilder fb(f.panel, {&f.eow});
  const auto v = fb.socint_features(f.b, 5);
  const auto want = fl::fin_features(f.panel, f.co, 5);
  for (std::size_t k = 0; k < fl::kFinCount; ++k) {
    if (is_missing(want[k])) {
      EXPECT_TRUE(is_missing(v[2 * k]));
    } else {
      EXPECT_EQ(v[2 * k], want[k]);
      EXPECT_EQ(v[2 * k + 1], 0.0);
    }
  }
}

TEST(SocInt, EgonetUnionsNetworksAndExcludesSelf) {
  Fixture f;
  f.family.add_edge({0, 0, EdgeType::kMarriage, {}, {}});
  const fl::FeatureBuilder fb(f.panel, {&f.eow, &f.family});
  EXPECT_EQ(fb.egonet(f.b, 3), (std::vector<std::size_t>{f.n1, f.n2}));
  EXPECT_EQ(fb.egonet(f.b, 4), (std::vector<std::size_t>{f.n1, f.n2, f.co}));
}

TEST(SocInt, RandomEgonetMatchesDirectRecomputation) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 100);
  BorrowerPanel p(1);
  SocialGraph g("FamilyNet");
  for (int i = 0; i < 6; ++i) {
    const std::string id = "P" + std::to_string(i);
    const auto r = p.add_borrower(id, NodeKind::kPerson);
    p.set_state(r, state(1, u(rng), u(rng), i % 2 ? 0.0 : u(rng), u(rng),
                         static_cast<DpdBucket>(i % 5)));
    g.add_node(id, NodeKind::kPerson);
  }
  for (NodeIndex v = 1; v < 6; ++v) g.add_edge({0, v, EdgeType::kParentChild, {}, {}});
  const fl::FeatureBuilder fb(p, {&g});
  const auto got = fb.socint_features(0, 1);
  for (std::size_t k = 0; k < fl::kFinCount; ++k) {
    double s = 0, ss = 0;
    for (std::size_t r = 1; r < 6; ++r) s += fl::fin_features(p, r, 1)[k];
    const double mean = s / 5;
    for (std::size_t r = 1; r < 6; ++r) {
      const double d = fl::fin_features(p, r, 1)[k] - mean;
      ss += d * d;
    }
    EXPECT_NEAR(got[2 * k], mean, 1e-9);
    EXPECT_NEAR(got[2 * k + 1], std::sqrt(ss / 5), 1e-9);
  }
}

TEST(SocIntHist, StaticNetworkConstantNeighborsHasZeroSd) {
  Fixture f;
  const fl::FeatureBuilder fb(f.panel, {&f.family});
  const auto v = fb.socint_hist_features(f.b, 6, 1);
  const auto names = fl::socint_hist_names();
  EXPECT_EQ(v[col(names, "socinthist_totaldebt_mean_mean3")], 15.0);
  EXPECT_EQ(v[col(names, "socinthist_totaldebt_mean_sd3")], 0.0);
  EXPECT_EQ(v[col(names, "socinthist_totaldebt_mean_sd6")], 0.0);
}

TEST(SocIntHist, DynamicNeighborMonthsBeforeEdgeAreMissing) {
  Fixture f;
  const fl::FeatureBuilder fb(f.panel, {&f.eow});
  const auto v = fb.socint_hist_features(f.b, 6, 1);
  const auto names = fl::socint_hist_names();
  // The employer's commercial debt is 30, 36, 42 over months 4..6; the
  // missing months 1..3 are excluded from the six-month window.
  EXPECT_NEAR(v[col(names, "socinthist_debt_commercial_mean_mean6")], 36.0, 1e-12);
  EXPECT_NEAR(v[col(names, "socinthist_debt_commercial_mean_mean3")], 36.0, 1e-12);
  const auto early = fb.socint_hist_features(f.b, 3, 1);
  EXPECT_TRUE(is_missing(early[col(names, "socinthist_debt_commercial_mean_mean3")]));
}

TEST(SocIntHist, ThreeMonthMeansOracle) {
  const std::vector<std::vector<double>> monthly{{12}, {18}, {24}};
  const std::vector<int> w{3};
  const auto v = fl::window_aggregate(monthly, w);
  EXPECT_NEAR(v[0], 18.0, 1e-12);
  EXPECT_NEAR(v[1], std::sqrt((36.0 + 0.0 + 36.0) / 3.0), 1e-12);
  EXPECT_NEAR(v[1], 4.89898, 1e-5);
}

TEST(Assemble, GroupsOrderingAndErrors) {
  Fixture f;
  const fl::FeatureBuilder fb(f.panel, {&f.eow, &f.family});
  const std::vector<fl::Observation> obs{{f.b, 5, 1}, {f.n1, 5, 1}};
  const std::vector<FeatureGroup> all(kAllGroups.begin(), kAllGroups.end());
  const auto e3 = fl::build_matrix(fb, obs, all);
  const std::vector<FeatureGroup> e1g{FeatureGroup::kFin};
  const std::vector<FeatureGroup> e2g{FeatureGroup::kFinHist, FeatureGroup::kFin};
  const auto e1 = fl::build_matrix(fb, obs, e1g);
  const auto e2 = fl::build_matrix(fb, obs, e2g);
  for (const auto& c : e1.columns) EXPECT_EQ(c.group, FeatureGroup::kFin);
  std::set<FeatureGroup> seen;
  for (const auto& c : e3.columns) seen.insert(c.group);
  EXPECT_EQ(seen.size(), 5u);
  // E2 columns = E1 columns followed by FIN_HIST columns.
  EXPECT_EQ(e2.cols(), e1.cols() + fl::fin_hist_names().size());
  for (std::size_t j = 0; j < e1.cols(); ++j) EXPECT_EQ(e2.columns[j].name, e1.columns[j].name);
  for (std::size_t j = 1; j < e3.cols(); ++j) {
    const auto& a = e3.columns[j - 1];
    const auto& b = e3.columns[j];
    EXPECT_TRUE(a.group < b.group || (a.group == b.group && a.name < b.name));
  }
  EXPECT_THROW(fl::build_matrix(fb, obs, {}), SchemaError);
  std::vector<fl::FeatureBuilder::Block> dup{{FeatureGroup::kFin, {"x", "x"}, {{1, 2}}}};
  const std::vector<std::string> ids{"r"};
  EXPECT_THROW(fl::assemble(ids, dup, e1g), SchemaError);
}

TEST(Assemble, IndependentOfCohortOrderAndThreads) {
  Fixture f;
  fl::FeatureOptions one, many;
  many.threads = 3;
  const fl::FeatureBuilder a(f.panel, {&f.eow, &f.family}, one);
  const fl::FeatureBuilder b(f.panel, {&f.eow, &f.family}, many);
  const std::vector<FeatureGroup> all(kAllGroups.begin(), kAllGroups.end());
  const std::vector<fl::Observation> fwd{{f.b, 6, 1}, {f.n1, 6, 1}, {f.co, 6, 2}};
  const std::vector<fl::Observation> rev{{f.co, 6, 2}, {f.n1, 6, 1}, {f.b, 6, 1}};
  const auto ma = fl::build_matrix(a, fwd, all);
  const auto mb = fl::build_matrix(b, rev, all);
  for (std::size_t j = 0; j < ma.cols(); ++j)
    for (std::size_t r = 0; r < 3; ++r) {
      const double x = ma.columns[j].values[r], y = mb.columns[j].values[2 - r];
      EXPECT_TRUE((is_missing(x) && is_missing(y)) || x == y) << ma.columns[j].name;
    }
}
