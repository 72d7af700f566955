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
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "credyn/common.hpp"

namespace credyn::evalkit {

enum class Metric { kKs, kAuc };

namespace detail {

inline void check_labels(std::span<const double> scores, std::span<const int> labels,
                         std::size_t& n_pos, std::size_t& n_neg) {
  if (scores.size() != labels.size()) throw MetricError("scores and labels differ in length");
  for (double s : scores)
    if (std::isnan(s)) throw MetricError("scores must not be missing");
  n_pos = n_neg = 0;
  for (int y : labels) {
    if (y == 1) ++n_pos;
    else if (y == 0) ++n_neg;
    else throw MetricError("labels must be 0 or 1");
  }
  if (n_pos == 0 || n_neg == 0) throw MetricError("metric undefined: only one class present");
}

inline std::vector<std::size_t> order_by_score(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return idx;
}

}  // namespace detail

// Probability that a random positive outranks a random negative, ties
// counted one half; computed from mid-ranks in O(n log n).
inline double auc(std::span<const double> scores, std::span<const int> labels) {
  std::size_t n_pos, n_neg;
  detail::check_labels(scores, labels, n_pos, n_neg);
  const auto idx = detail::order_by_score(scores);
  double rank_sum_pos = 0.0;  // sum of 1-based mid-ranks of positives
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    std::size_t pos_in_group = 0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      pos_in_group += static_cast<std::size_t>(labels[idx[j]]);
      ++j;
    }
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    rank_sum_pos += mid_rank * static_cast<double>(pos_in_group);
    i = j;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  const double u = rank_sum_pos - np * (np + 1.0) / 2.0;
  return u / (np * nn);
}

// Largest gap between the empirical score CDFs of the two classes.
inline double ks(std::span<const double> scores, std::span<const int> labels) {
  std::size_t n_pos, n_neg;
  detail::check_labels(scores, labels, n_pos, n_neg);
  const auto idx = detail::order_by_score(scores);
  std::size_t cum_pos = 0, cum_neg = 0;
  double best = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      if (labels[idx[j]] == 1) ++cum_pos;
      else ++cum_neg;
      ++j;
    }
    const double gap = std::abs(static_cast<double>(cum_pos) / static_cast<double>(n_pos) -
                                static_cast<double>(cum_neg) / static_cast<double>(n_neg));
    best = std::max(best, gap);
    i = j;
  }
  return best;
}

struct FoldMetrics {
  double ks = 0.0;
  double auc = 0.0;
};

struct CvResult {
  std::vector<FoldMetrics> folds;
  double ks_mean = 0.0, ks_sd = 0.0;
  double auc_mean = 0.0, auc_sd = 0.0;
  std::uint64_t fold_assignment_id = 0;

  std::vector<double> values(Metric m) const {
    std::vector<double> out;
    for (const auto& f : folds) out.push_back(m == Metric::kKs ? f.ks : f.auc);
    return out;
  }
  double mean(Metric m) const { return m == Metric::kKs ? ks_mean : auc_mean; }
};

// Fills means and sample SDs (n - 1) from the fold values.
inline void summarize(CvResult& r) {
  auto stats = [&](Metric m, double& mean, double& sd) {
    const auto v = r.values(m);
    mean = sd = 0.0;
    if (v.empty()) return;
    mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() < 2) return;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  };
  stats(Metric::kKs, r.ks_mean, r.ks_sd);
  stats(Metric::kAuc, r.auc_mean, r.auc_sd);
}

// Fold of each id: hash(id, seed) mod k. A borrower lands in the same fold in
// every month and experiment.
inline std::vector<int> make_folds(std::span<const std::string> ids, int k, std::uint64_t seed) {
  if (k < 2) throw Error("number of folds must be at least 2");
  if (static_cast<std::size_t>(k) > ids.size())
    throw Error("number of folds " + std::to_string(k) + " exceeds row count " +
                std::to_string(ids.size()));
  std::vector<int> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(static_cast<int>(hash_id(id, seed) % static_cast<std::uint64_t>(k)));
  return out;
}

inline std::uint64_t fold_assignment_id(int k, std::uint64_t seed) {
  return mix64(seed ^ (static_cast<std::uint64_t>(k) << 32));
}

struct ComparisonResult {
  double a_mean = 0.0;
  double b_mean = 0.0;
  double delta_mean = 0.0;          // mean of b - a
  double relative_increment = 0.0;  // (b_mean - a_mean) / a_mean; NaN when a_mean == 0
  bool increment_defined = true;
  double t_statistic = 0.0;
  double p_value = 1.0;
  bool significant = false;
};

inline constexpr double kAlpha = 0.05;

// Two-sided paired t-test of b against a over aligned folds.
inline ComparisonResult paired_ttest(std::span<const double> a, std::span<const double> b,
                                     double alpha = kAlpha) {
  if (a.size() != b.size()) throw Error("paired t-test: length mismatch");
  if (a.size() < 2) throw Error("paired t-test: need at least two pairs");
  const double n = static_cast<double>(a.size());
  ComparisonResult r;
  r.a_mean = std::accumulate(a.begin(), a.end(), 0.0) / n;
  r.b_mean = std::accumulate(b.begin(), b.end(), 0.0) / n;
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = b[i] - a[i];
  const double dm = std::accumulate(d.begin(), d.end(), 0.0) / n;
  r.delta_mean = dm;
  if (r.a_mean == 0.0) {
    r.increment_defined = false;
    r.relative_increment = std::numeric_limits<double>::quiet_NaN();
  } else {
    r.relative_increment = (r.b_mean - r.a_mean) / r.a_mean;
  }
  double ss = 0.0;
  bool all_zero = true;
  for (double x : d) {
    ss += (x - dm) * (x - dm);
    all_zero = all_zero && x == 0.0;
  }
  const double sd = std::sqrt(ss / (n - 1.0));
  if (all_zero) {
    r.t_statistic = 0.0;
    r.p_value = 1.0;
  } else if (sd == 0.0) {
    r.t_statistic = dm > 0 ? std::numeric_limits<double>::infinity()
                           : -std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
  } else {
    r.t_statistic = dm / (sd / std::sqrt(n));
    const ::boost::math::students_t dist(n - 1.0);
    r.p_value = std::min(1.0, 2.0 * ::boost::math::cdf(::boost::math::complement(dist, std::abs(r.t_statistic))));
  }
  r.significant = r.p_value < alpha;
  return r;
}

}  // namespace credyn::evalkit
