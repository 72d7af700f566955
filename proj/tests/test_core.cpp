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
#include <set>

#include "credyn/common.hpp"
#include "credyn/graph.hpp"
#include "credyn/panel.hpp"
#include "credyn/parallel.hpp"

using namespace credyn;

TEST(Common, MeanSdIsPopulationAndSkipsMissing) {
  const std::vector<double> v{10, 20, 30, kMissing};
  const auto ms = mean_sd(v);
  EXPECT_EQ(ms.n, 3u);
  EXPECT_DOUBLE_EQ(ms.mean, 20.0);
  EXPECT_NEAR(ms.sd, 8.16496580927726, 1e-12);
  const std::vector<double> none{kMissing};
  EXPECT_TRUE(is_missing(mean_sd(none).mean));
}

TEST(Common, SigmoidIsStableAtExtremes) {
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  EXPECT_GT(sigmoid(-800.0), -1e-300);
  EXPECT_LE(sigmoid(800.0), 1.0);
  EXPECT_NEAR(sigmoid(logit(0.3)), 0.3, 1e-15);
}

TEST(Common, HashIsSeededAndStable) {
  EXPECT_EQ(hash_id("P000001", 7), hash_id("P000001", 7));
  EXPECT_NE(hash_id("P000001", 7), hash_id("P000001", 8));
  EXPECT_NE(hash_id("P000001", 7), hash_id("P000002", 7));
  const double u = hash_unit(hash_id("x", 1));
  EXPECT_GE(u, 0.0);
  EXPECT_LT(u, 1.0);
}

TEST(Common, ConfigErrorNamesField) {
  try {
    throw ConfigError("rho", "must lie in (0, 1]");
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "rho");
    EXPECT_NE(std::string(e.what()).find("rho"), std::string::npos);
  }
}

TEST(Parallel, EveryIndexVisitedOnceAnyThreadCount) {
  for (std::size_t threads : {1u, 2u, 5u}) {
    std::vector<int> hit(1000, 0);
    parallel_for(hit.size(), threads, [&](std::size_t i) { hit[i] += 1; });
    for (int h : hit) ASSERT_EQ(h, 1);
  }
}

TEST(Parallel, RethrowsWorkerException) {
  EXPECT_THROW(parallel_for(10, 3,
                            [](std::size_t i) {
                              if (i == 7) throw Error("boom");
                            }),
               Error);
}

TEST(Panel, DpdNamesRoundTripAndCodes) {
  for (auto name : kDpdNames) EXPECT_EQ(to_string(*parse_dpd_bucket(name)), name);
  EXPECT_FALSE(parse_dpd_bucket("DPD_90").has_value());
  EXPECT_EQ(dpd_code(DpdBucket::kCurrent), 0);
  EXPECT_EQ(dpd_code(DpdBucket::k30To59), 2);
  EXPECT_EQ(dpd_code(DpdBucket::k90Plus), 4);
}

TEST(Panel, StatesAndCreditRelationship) {
  BorrowerPanel p(6);
  const auto r = p.add_borrower("P1", NodeKind::kPerson);
  EXPECT_EQ(p.add_borrower("P1", NodeKind::kPerson), r);
  EXPECT_THROW(p.add_borrower("P1", NodeKind::kCompany), Error);
  MonthlyFinancialState s;
  s.month = 3;
  s.debt_consumer = 5;
  p.set_state(r, s);
  EXPECT_EQ(p.state(r, 2), nullptr);
  ASSERT_NE(p.state(r, 3), nullptr);
  EXPECT_TRUE(p.state(r, 3)->has_credit_relationship());
  EXPECT_EQ(p.first_observed(r), 3);
  EXPECT_EQ(p.state(r, 7), nullptr);
  s.month = 7;
  EXPECT_THROW(p.set_state(r, s), Error);
  MonthlyFinancialState empty;
  EXPECT_FALSE(empty.has_credit_relationship());
}

TEST(Graph, RejectsBadNodesAndEdges) {
  SocialGraph g("G");
  const auto a = g.add_node("a", NodeKind::kPerson);
  EXPECT_THROW(g.add_node("a", NodeKind::kPerson), Error);
  EXPECT_THROW(g.add_edge({a, 5, EdgeType::kMarriage, {}, {}}), Error);
  const auto b = g.add_node("b", NodeKind::kCompany);
  EXPECT_THROW(g.add_edge({a, b, EdgeType::kOwnership, 5, 3}), Error);
  EXPECT_EQ(g.ensure_node("b", NodeKind::kCompany), b);
}

TEST(Graph, SliceKeepsStaticAndValidEdges) {
  SocialGraph g("G");
  const auto a = g.add_node("a", NodeKind::kPerson);
  const auto b = g.add_node("b", NodeKind::kCompany);
  const auto c = g.add_node("c", NodeKind::kPerson);
  g.add_edge({a, b, EdgeType::kEmployment, 3, 5});
  g.add_edge({a, c, EdgeType::kMarriage, {}, {}});
  const auto at6 = slice(g, 6);
  EXPECT_EQ(at6.num_nodes(), 3u);
  ASSERT_EQ(at6.edges().size(), 1u);
  EXPECT_EQ(at6.edges()[0].type, EdgeType::kMarriage);
  EXPECT_EQ(slice(g, 4).edges().size(), 2u);
  EXPECT_EQ(slice(g, 3).edges().size(), 2u);
  EXPECT_EQ(slice(g, 2).edges().size(), 1u);
}

TEST(Graph, StaticNetworkSliceIsIdenticalEveryMonth) {
  SocialGraph g("FamilyNet");
  for (int i = 0; i < 5; ++i) g.add_node("p" + std::to_string(i), NodeKind::kPerson);
  g.add_edge({0, 1, EdgeType::kMarriage, {}, {}});
  g.add_edge({0, 2, EdgeType::kParentChild, {}, {}});
  g.add_edge({3, 4, EdgeType::kParentChild, {}, {}});
  for (int m = 1; m <= 24; ++m) EXPECT_EQ(slice(g, m), g);
}
