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
#include <cstdio>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "credyn/common.hpp"
#include "credyn/graph.hpp"
#include "credyn/panel.hpp"

namespace credyn::synthpop {

struct PopulationConfig {
  std::size_t n_persons = 20000;
  std::size_t n_companies = 4000;
  std::size_t cohort_persons = 8000;
  std::size_t cohort_companies = 2000;
  int horizon_months = 24;
  std::uint64_t seed = 42;
  double homophily_strength = 0.8;
  // Monthly probability of a current loan entering arrears at median risk.
  double base_hazard_person = 0.003;
  double base_hazard_company = 0.003;
  int loan_term_min = 6;
  int loan_term_max = 24;
  // Cohort first loans originate uniformly in calendar months [1, window].
  int origination_window = 1;
  // Log-odds change of every forward transition across the full risk range.
  double risk_slope = 7.0;
  // Probability an arrears bucket rolls forward at median risk.
  double roll_probability = 0.5;
  // Probability a non-rolling arrears bucket cures back to CURRENT.
  double cure_probability = 0.3;

  void validate() const {
    if (n_persons == 0 && n_companies == 0) throw ConfigError("n_persons", "population is empty");
    if (cohort_persons > n_persons) throw ConfigError("cohort_persons", "exceeds n_persons");
    if (cohort_companies > n_companies)
      throw ConfigError("cohort_companies", "exceeds n_companies");
    if (cohort_persons + cohort_companies == 0) throw ConfigError("cohort_persons", "cohort is empty");
    if (horizon_months < 13) throw ConfigError("horizon_months", "must be at least 13");
    auto prob = [](const char* name, double p) {
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(name, "must lie in [0, 1]");
    };
    prob("homophily_strength", homophily_strength);
    prob("base_hazard_person", base_hazard_person);
    prob("base_hazard_company", base_hazard_company);
    prob("roll_probability", roll_probability);
    prob("cure_probability", cure_probability);
    if (loan_term_min < 1) throw ConfigError("loan_term_min", "must be at least 1");
    if (loan_term_max < loan_term_min) throw ConfigError("loan_term_max", "below loan_term_min");
    if (origination_window < 1 || origination_window > horizon_months)
      throw ConfigError("origination_window", "must lie in [1, horizon_months]");
    if (!std::isfinite(risk_slope)) throw ConfigError("risk_slope", "must be finite");
  }
};

// Forward-transition probabilities of the delinquency chain for one node.
// Both forward probabilities increase monotonically in risk.
struct DpdChain {
  double p_enter = 0.0;  // CURRENT -> DPD_1_29
  double p_roll = 0.0;   // bucket k -> k+1 for the three arrears buckets
  double p_cure = 0.0;   // arrears -> CURRENT, conditional on not rolling

  static DpdChain for_risk(double risk, double base_hazard, const PopulationConfig& c) {
    auto shifted = [&](double p) {
      if (p <= 0.0) return 0.0;
      if (p >= 1.0) return 1.0;
      return sigmoid(logit(p) + c.risk_slope * (risk - 0.5));
    };
    return DpdChain{shifted(base_hazard), shifted(c.roll_probability), c.cure_probability};
  }

  DpdBucket step(DpdBucket b, std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    switch (b) {
      case DpdBucket::kCurrent:
        return u(rng) < p_enter ? DpdBucket::k1To29 : DpdBucket::kCurrent;
      case DpdBucket::k90Plus:
        return b;
      default: {
        const double x = u(rng);
        if (x < p_roll) return static_cast<DpdBucket>(static_cast<int>(b) + 1);
        if (x < p_roll + (1.0 - p_roll) * p_cure) return DpdBucket::kCurrent;
        return b;
      }
    }
  }
};

enum class DebtType : std::uint8_t { kConsumer, kCommercial, kMortgage };

// Constant-installment loan. Installments fall due once per month after the
// origination month; a CURRENT bucket means every due installment is paid.
struct Loan {
  DebtType type = DebtType::kConsumer;
  double principal = 0.0;
  int term_months = 12;
  double monthly_rate = 0.01;
  int start_month = 1;
  int payments_made = 0;
};

// Outstanding principal after `payments` annuity installments.
inline double remaining_principal(const Loan& loan, int payments) {
  payments = std::clamp(payments, 0, loan.term_months);
  if (payments == loan.term_months) return 0.0;
  if (payments == 0) return loan.principal;
  const double r = loan.monthly_rate;
  if (r == 0.0)
    return loan.principal * (1.0 - static_cast<double>(payments) / loan.term_months);
  const double g = std::pow(1.0 + r, loan.term_months);
  const double gk = std::pow(1.0 + r, payments);
  return loan.principal * (g - gk) / (g - 1.0);
}

// Advances an active loan to `month` under that month's delinquency bucket.
// The loan closes (has_active_loan false, debt 0) in the first CURRENT month
// at which all term installments have fallen due; a DPD_90_PLUS loan never
// returns to CURRENT and therefore never closes.
inline MonthlyFinancialState amortize(Loan& loan, DpdBucket bucket, int month) {
  MonthlyFinancialState s;
  s.month = month;
  s.dpd_bucket = bucket;
  const int due = std::max(0, month - loan.start_month);
  if (bucket == DpdBucket::kCurrent) loan.payments_made = std::min(loan.term_months, due);
  if (bucket == DpdBucket::kCurrent && loan.payments_made == loan.term_months) {
    s.has_active_loan = false;
    return s;
  }
  s.has_active_loan = true;
  const double debt = std::round(remaining_principal(loan, loan.payments_made) * 100.0) / 100.0;
  switch (loan.type) {
    case DebtType::kConsumer: s.debt_consumer = debt; break;
    case DebtType::kCommercial: s.debt_commercial = debt; break;
    case DebtType::kMortgage: s.debt_mortgage = debt; break;
  }
  return s;
}

struct Population {
  BorrowerPanel panel;
  SocialGraph eownet{"EOWNet"};
  SocialGraph familynet{"FamilyNet"};
  // Hidden risk in [0, 1], indexed like panel.records(). Never exported.
  std::vector<double> latent_risk;
};

namespace detail {

inline std::string make_id(char prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%06zu", prefix, i);
  return buf;
}

inline double round_cents(double x) { return std::round(x * 100.0) / 100.0; }

// Latent risk: Gaussian base draws, one homophily smoothing pass over the
// union of both networks, then a rank transform to Uniform(0, 1).
inline std::vector<double> latent_risk(const std::vector<std::vector<std::size_t>>& nbrs,
                                       double homophily, std::mt19937_64& rng) {
  const std::size_t n = nbrs.size();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(n);
  for (double& v : z) v = normal(rng);
  std::vector<double> raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (nbrs[i].empty()) {
      raw[i] = z[i];
      continue;
    }
    double m = 0.0;
    for (std::size_t j : nbrs[i]) m += z[j];
    m /= static_cast<double>(nbrs[i].size());
    raw[i] = (1.0 - homophily) * z[i] + homophily * m;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return raw[a] != raw[b] ? raw[a] < raw[b] : a < b;
  });
  std::vector<double> risk(n);
  for (std::size_t r = 0; r < n; ++r)
    risk[order[r]] = (static_cast<double>(r) + 0.5) / static_cast<double>(n);
  return risk;
}

struct Revolving {
  double limit = 0.0;
};

inline double revolving_amount(const Revolving& line, double risk, DpdBucket b,
                               std::mt19937_64& rng) {
  if (line.limit <= 0.0) return 0.0;
  if (b == DpdBucket::k90Plus) return line.limit;
  std::normal_distribution<double> noise(0.0, 0.1);
  const double util = std::clamp(
      0.15 + 0.5 * risk + (b != DpdBucket::kCurrent ? 0.25 : 0.0) + noise(rng), 0.0, 1.0);
  return round_cents(line.limit * util);
}

inline Loan draw_loan(NodeKind kind, double risk, int start_month, const PopulationConfig& c,
                      bool allow_mortgage, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> term(c.loan_term_min, c.loan_term_max);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Loan loan;
  loan.start_month = start_month;
  if (kind == NodeKind::kCompany) {
    loan.type = DebtType::kCommercial;
    loan.monthly_rate = 0.012;
    loan.term_months = term(rng);
    std::normal_distribution<double> amt(10.0 - 0.6 * (risk - 0.5), 0.8);
    loan.principal = round_cents(std::exp(amt(rng)));
  } else if (allow_mortgage && u(rng) < 0.25) {
    loan.type = DebtType::kMortgage;
    loan.monthly_rate = 0.007;
    loan.term_months = std::uniform_int_distribution<int>(120, 240)(rng);
    std::normal_distribution<double> amt(11.5, 0.5);
    loan.principal = round_cents(std::exp(amt(rng)));
  } else {
    loan.type = DebtType::kConsumer;
    loan.monthly_rate = 0.015;
    loan.term_months = term(rng);
    std::normal_distribution<double> amt(8.0 - 0.6 * (risk - 0.5), 0.6);
    loan.principal = round_cents(std::exp(amt(rng)));
  }
  return loan;
}

}  // namespace detail

// Generates the panel, EOWNet and FamilyNet for one seed. Deterministic:
// the same config yields identical output.
inline Population generate_population(const PopulationConfig& c) {
  c.validate();
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int H = c.horizon_months;

  Population pop;
  pop.panel = BorrowerPanel(H);
  const std::size_t n_total = c.n_persons + c.n_companies;
  std::vector<NodeKind> kinds(n_total);
  for (std::size_t i = 0; i < c.n_persons; ++i) {
    pop.panel.add_borrower(detail::make_id('P', i), NodeKind::kPerson);
    kinds[i] = NodeKind::kPerson;
  }
  for (std::size_t i = 0; i < c.n_companies; ++i) {
    pop.panel.add_borrower(detail::make_id('C', i), NodeKind::kCompany);
    kinds[c.n_persons + i] = NodeKind::kCompany;
  }
  const auto& recs = pop.panel.records();
  auto person = [&](std::size_t i) { return i; };
  auto company = [&](std::size_t i) { return c.n_persons + i; };

  // FamilyNet: static marriages and parent -> child links among persons.
  for (std::size_t i = 0; i < c.n_persons; ++i)
    pop.familynet.add_node(recs[person(i)].id, NodeKind::kPerson);
  std::vector<std::vector<std::size_t>> union_nbrs(n_total);
  auto link = [&](std::size_t a, std::size_t b) {
    union_nbrs[a].push_back(b);
    union_nbrs[b].push_back(a);
  };
  std::vector<std::size_t> spouse(c.n_persons, static_cast<std::size_t>(-1));
  if (c.n_persons >= 2) {
    std::vector<std::size_t> perm(c.n_persons);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const std::size_t married = (c.n_persons * 6 / 10) & ~std::size_t{1};
    for (std::size_t k = 0; k + 1 < married; k += 2) {
      const std::size_t a = perm[k], b = perm[k + 1];
      spouse[a] = b;
      spouse[b] = a;
      pop.familynet.add_edge(Edge{static_cast<NodeIndex>(a), static_cast<NodeIndex>(b),
                                  EdgeType::kMarriage, std::nullopt, std::nullopt});
      link(a, b);
    }
    std::uniform_int_distribution<std::size_t> pick(0, c.n_persons - 1);
    for (std::size_t child = 0; child < c.n_persons; ++child) {
      if (unit(rng) >= 0.6) continue;
      std::size_t parent = pick(rng);
      if (parent == child) continue;
      pop.familynet.add_edge(Edge{static_cast<NodeIndex>(parent), static_cast<NodeIndex>(child),
                                  EdgeType::kParentChild, std::nullopt, std::nullopt});
      link(parent, child);
      const std::size_t other = spouse[parent];
      if (other != static_cast<std::size_t>(-1) && other != child && unit(rng) < 0.8) {
        pop.familynet.add_edge(Edge{static_cast<NodeIndex>(other), static_cast<NodeIndex>(child),
                                    EdgeType::kParentChild, std::nullopt, std::nullopt});
        link(other, child);
      }
    }
  }

  // EOWNet: companies plus the persons that own or work for one. Every edge
  // carries a validity interval.
  for (std::size_t i = 0; i < c.n_companies; ++i)
    pop.eownet.add_node(recs[company(i)].id, NodeKind::kCompany);
  auto eow_index = [&](std::size_t rec) {
    return pop.eownet.ensure_node(recs[rec].id, recs[rec].kind);
  };
  std::uniform_int_distribution<int> any_month(1, H);
  auto interval = [&](double p_late_start, double mean_len) {
    int from = unit(rng) < p_late_start ? any_month(rng) : 1;
    std::geometric_distribution<int> len(1.0 / mean_len);
    int to = std::min(H, from + len(rng));
    return std::pair{from, to};
  };
  if (c.n_persons > 0) {
    std::uniform_int_distribution<std::size_t> pick(0, c.n_persons - 1);
    std::uniform_int_distribution<int> owners(1, 3);
    std::poisson_distribution<int> staff(4.0);
    for (std::size_t i = 0; i < c.n_companies; ++i) {
      const NodeIndex co = static_cast<NodeIndex>(i);
      for (int k = owners(rng); k > 0; --k) {
        const std::size_t p = pick(rng);
        const NodeIndex pi = eow_index(person(p));
        const int from = unit(rng) < 0.9 ? 1 : any_month(rng);
        pop.eownet.add_edge(Edge{pi, co, EdgeType::kOwnership, from, H});
        link(person(p), company(i));
      }
      for (int k = staff(rng); k > 0; --k) {
        const std::size_t p = pick(rng);
        const NodeIndex pi = eow_index(person(p));
        auto [from, to] = interval(0.3, 18.0);
        pop.eownet.add_edge(Edge{pi, co, EdgeType::kEmployment, from, to});
        link(person(p), company(i));
      }
    }
  }
  if (c.n_companies >= 2) {
    // Preferential attachment over companies in random arrival order.
    std::vector<std::size_t> order(c.n_companies);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> targets;  // one entry per unit of attachment weight
    targets.push_back(order[0]);
    for (std::size_t k = 1; k < order.size(); ++k) {
      const std::size_t src = order[k];
      for (int m = 0; m < 2; ++m) {
        std::uniform_int_distribution<std::size_t> pick(0, targets.size() - 1);
        const std::size_t dst = targets[pick(rng)];
        if (dst == src) continue;
        auto [from, to] = interval(0.5, 8.0);
        pop.eownet.add_edge(Edge{static_cast<NodeIndex>(src), static_cast<NodeIndex>(dst),
                                 EdgeType::kTransaction, from, to});
        link(company(src), company(dst));
        targets.push_back(dst);
      }
      targets.push_back(src);
    }
  }

  pop.latent_risk = detail::latent_risk(union_nbrs, c.homophily_strength, rng);

  // Cohort: random persons and companies taking their first loan.
  std::vector<bool> in_cohort(n_total, false);
  auto choose = [&](std::size_t base, std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), base);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
  };
  std::vector<std::size_t> cohort = choose(0, c.n_persons, c.cohort_persons);
  for (std::size_t i : choose(c.n_persons, c.n_companies, c.cohort_companies)) cohort.push_back(i);
  std::uniform_int_distribution<int> orig(1, c.origination_window);
  std::vector<int> origination(n_total, 0);
  for (std::size_t i : cohort) {
    in_cohort[i] = true;
    origination[i] = orig(rng);
    pop.panel.add_cohort_member({recs[i].id, origination[i]});
  }

  // Monthly financial behaviour.
  for (std::size_t i = 0; i < n_total; ++i) {
    const double risk = pop.latent_risk[i];
    const NodeKind kind = kinds[i];
    const double hazard = kind == NodeKind::kPerson ? c.base_hazard_person : c.base_hazard_company;
    const DpdChain chain = DpdChain::for_risk(risk, hazard, c);
    detail::Revolving line;
    Loan loan;
    bool has_loan = false;
    DpdBucket bucket = DpdBucket::kCurrent;
    int first_month = 1;

    if (in_cohort[i]) {
      first_month = origination[i];
      loan = detail::draw_loan(kind, risk, first_month, c, false, rng);
      has_loan = true;
      if (unit(rng) < 0.4) line.limit = detail::round_cents(loan.principal * (0.2 + 0.3 * unit(rng)));
    } else {
      if (unit(rng) < 0.5)
        line.limit = detail::round_cents(std::exp(std::normal_distribution<double>(7.5, 0.7)(rng)));
      if (unit(rng) < 0.7) {
        // A loan already in progress; simulate it from its true start.
        Loan l = detail::draw_loan(kind, risk, 1, c, true, rng);
        const int age = std::uniform_int_distribution<int>(0, std::min(l.term_months - 1, 36))(rng);
        l.start_month = 1 - age;
        for (int m = l.start_month + 1; m <= 0; ++m) {
          bucket = chain.step(bucket, rng);
          if (!amortize(l, bucket, m).has_active_loan) break;
        }
        if (l.payments_made < l.term_months || bucket != DpdBucket::kCurrent) {
          loan = l;
          has_loan = true;
        } else {
          bucket = DpdBucket::kCurrent;
        }
      }
    }

    for (int m = 1; m <= H; ++m) {
      MonthlyFinancialState s;
      s.month = m;
      if (m < first_month) {
        pop.panel.set_state(i, s);
        continue;
      }
      if (has_loan && m > loan.start_month) bucket = chain.step(bucket, rng);
      if (has_loan) {
        s = amortize(loan, bucket, m);
        if (!s.has_active_loan) {
          has_loan = false;
          bucket = DpdBucket::kCurrent;
        }
      } else if (!in_cohort[i] && unit(rng) < 0.02) {
        loan = detail::draw_loan(kind, risk, m, c, true, rng);
        has_loan = true;
        s = amortize(loan, bucket, m);
      }
      s.month = m;
      s.revolving_amount = detail::revolving_amount(line, risk, s.dpd_bucket, rng);
      pop.panel.set_state(i, s);
    }
  }
  return pop;
}

}  // namespace credyn::synthpop
