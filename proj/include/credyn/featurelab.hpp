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
#include <cctype>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "credyn/common.hpp"
#include "credyn/feature_matrix.hpp"
#include "credyn/graph.hpp"
#include "credyn/graphstats.hpp"
#include "credyn/panel.hpp"
#include "credyn/parallel.hpp"

namespace credyn::featurelab {

inline constexpr std::array<std::string_view, 15> kFinNames = {
    "debt_consumer", "debt_commercial", "debt_mortgage", "totaldebt",       "revolving",
    "dpd_code",      "dpd_current",     "dpd_1_29",      "dpd_30_59",       "dpd_60_89",
    "dpd_90_plus",   "debt_delinquent", "ratio_consumer", "ratio_commercial", "ratio_mortgage"};
inline constexpr std::size_t kFinCount = kFinNames.size();
using FinVector = std::array<double, kFinCount>;

inline constexpr std::array<std::string_view, 7> kNodeStatNames = {
    "degree", "degree_centrality", "triangles", "pagerank", "hits_authority", "hits_hub",
    "articulation"};

inline constexpr std::array<int, 2> kDefaultWindows = {3, 6};

// Point-in-time financial features of one monthly state.
inline FinVector fin_features(const MonthlyFinancialState& s) {
  FinVector v{};
  const double total = s.total_debt();
  v[0] = s.debt_consumer;
  v[1] = s.debt_commercial;
  v[2] = s.debt_mortgage;
  v[3] = total;
  v[4] = s.revolving_amount;
  v[5] = dpd_code(s.dpd_bucket);
  for (int b = 0; b < 5; ++b) v[6 + b] = dpd_code(s.dpd_bucket) == b ? 1.0 : 0.0;
  v[11] = s.dpd_bucket == DpdBucket::kCurrent ? 0.0 : total;
  v[12] = total > 0.0 ? s.debt_consumer / total : kMissing;
  v[13] = total > 0.0 ? s.debt_commercial / total : kMissing;
  v[14] = total > 0.0 ? s.debt_mortgage / total : kMissing;
  return v;
}

inline FinVector fin_features(const BorrowerPanel& panel, std::size_t record, int month) {
  const auto* s = panel.state(record, month);
  if (!s)
    throw Error("borrower " + panel.records()[record].id + " not observed at month " +
                std::to_string(month));
  return fin_features(*s);
}

inline std::vector<std::string> fin_names() {
  std::vector<std::string> out;
  for (auto n : kFinNames) out.push_back("fin_" + std::string(n));
  return out;
}

// Window [max(history_start, month - w + 1), month], observation month included.
inline int window_begin(int month, int w, int history_start) {
  return std::max(history_start, month - w + 1);
}

inline std::vector<std::string> fin_hist_names(std::span<const int> windows = kDefaultWindows) {
  std::vector<std::string> out;
  for (auto n : kFinNames)
    for (int w : windows) {
      out.push_back("finhist_" + std::string(n) + "_mean" + std::to_string(w));
      out.push_back("finhist_" + std::string(n) + "_sd" + std::to_string(w));
    }
  out.push_back("finhist_months_available");
  return out;
}

// Mean and population SD of every FIN feature over each trailing window,
// laid out as fin_hist_names(). Unobserved months and missing values are
// skipped; a window with no values yields kMissing.
inline std::vector<double> fin_hist_features(const BorrowerPanel& panel, std::size_t record,
                                             int month, int history_start = 1,
                                             std::span<const int> windows = kDefaultWindows) {
  if (month < 1) throw Error("month must be >= 1");
  int max_w = 0;
  for (int w : windows) max_w = std::max(max_w, w);
  const int first = window_begin(month, max_w, history_start);
  std::vector<FinVector> series;  // series.back() is `month`
  std::vector<bool> observed;
  for (int m = first; m <= month; ++m) {
    const auto* s = panel.state(record, m);
    observed.push_back(s != nullptr);
    series.push_back(s ? fin_features(*s) : FinVector{});
  }
  std::vector<double> out;
  out.reserve(kFinCount * windows.size() * 2 + 1);
  std::vector<double> buf;
  for (std::size_t f = 0; f < kFinCount; ++f) {
    for (int w : windows) {
      buf.clear();
      const int lo = window_begin(month, w, history_start);
      for (int m = lo; m <= month; ++m) {
        const std::size_t k = static_cast<std::size_t>(m - first);
        if (observed[k]) buf.push_back(series[k][f]);
      }
      const MeanSd ms = mean_sd(buf);
      out.push_back(ms.mean);
      out.push_back(ms.sd);
    }
  }
  out.push_back(static_cast<double>(std::max(0, month - history_start + 1)));
  return out;
}

// Mean and population SD of each FIN feature over a set of neighbor FIN
// vectors; all kMissing when the egonet is empty. Layout: per FIN feature,
// mean then sd.
inline std::vector<double> aggregate_egonet(std::span<const FinVector> neighbors) {
  std::vector<double> out;
  out.reserve(kFinCount * 2);
  std::vector<double> buf;
  for (std::size_t f = 0; f < kFinCount; ++f) {
    buf.clear();
    for (const auto& v : neighbors) buf.push_back(v[f]);
    const MeanSd ms = mean_sd(buf);
    out.push_back(ms.mean);
    out.push_back(ms.sd);
  }
  return out;
}

inline std::vector<std::string> socint_names() {
  std::vector<std::string> out;
  for (auto n : kFinNames) {
    std::string base = "socint_" + std::string(n);
    out.push_back(base + "_mean");
    out.push_back(base + "_sd");
  }
  return out;
}

inline std::vector<std::string> socint_hist_names(std::span<const int> windows = kDefaultWindows) {
  std::vector<std::string> out;
  for (const auto& n : socint_names())
    for (int w : windows) {
      std::string base = "socinthist_" + n.substr(std::string_view("socint_").size());
      out.push_back(base + "_mean" + std::to_string(w));
      out.push_back(base + "_sd" + std::to_string(w));
    }
  return out;
}

// Window statistics over a sequence of monthly feature vectors (oldest
// first, observation month last). Missing months are excluded per column.
inline std::vector<double> window_aggregate(std::span<const std::vector<double>> monthly,
                                            std::span<const int> window_lengths) {
  std::vector<double> out;
  if (monthly.empty()) return out;
  const std::size_t ncol = monthly.back().size();
  std::vector<double> buf;
  for (std::size_t c = 0; c < ncol; ++c) {
    for (int w : window_lengths) {
      buf.clear();
      const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(w), monthly.size());
      for (std::size_t k = monthly.size() - take; k < monthly.size(); ++k) buf.push_back(monthly[k][c]);
      const MeanSd ms = mean_sd(buf);
      out.push_back(ms.mean);
      out.push_back(ms.sd);
    }
  }
  return out;
}

// One borrower row: the panel record, the calendar observation month and the
// first month of the borrower's own credit history.
struct Observation {
  std::size_t record = 0;
  int month = 1;
  int history_start = 1;
};

struct FeatureOptions {
  std::vector<int> windows{3, 6};
  graphstats::NodeStatsOptions node_stats;
  std::size_t threads = 1;
};

// Builds the five feature groups over a panel and any number of networks.
// Monthly graph slices, node statistics and FIN vectors are cached; the
// builder is safe to use from several threads.
class FeatureBuilder {
 public:
  FeatureBuilder(const BorrowerPanel& panel, std::vector<const SocialGraph*> networks,
                 FeatureOptions opt = {})
      : panel_(panel), networks_(std::move(networks)), opt_(std::move(opt)) {
    for (const SocialGraph* g : networks_) {
      NetworkIndex ix;
      ix.is_static = std::all_of(g->edges().begin(), g->edges().end(),
                                 [](const Edge& e) { return e.is_static(); });
      ix.node_of_record.assign(panel_.records().size(), std::nullopt);
      ix.record_of_node.assign(g->num_nodes(), std::nullopt);
      for (std::size_t v = 0; v < g->num_nodes(); ++v) {
        if (auto r = panel_.find(g->nodes()[v].id)) {
          ix.record_of_node[v] = *r;
          ix.node_of_record[*r] = static_cast<NodeIndex>(v);
        }
      }
      index_.push_back(std::move(ix));
    }
  }

  const BorrowerPanel& panel() const { return panel_; }
  const FeatureOptions& options() const { return opt_; }

  std::vector<std::string> node_stat_names() const {
    std::vector<std::string> out;
    for (const SocialGraph* g : networks_) {
      std::string net = g->name();
      std::transform(net.begin(), net.end(), net.begin(), [](unsigned char ch) { return std::tolower(ch); });
      for (auto s : kNodeStatNames) out.push_back("node_" + net + "_" + std::string(s));
    }
    return out;
  }

  // NODE_STATS columns; kMissing for networks the borrower is not part of.
  std::vector<double> node_stat_features(std::size_t record, int month) const {
    std::vector<double> out;
    for (std::size_t k = 0; k < networks_.size(); ++k) {
      const auto node = index_[k].node_of_record[record];
      if (!node) {
        out.insert(out.end(), kNodeStatNames.size(), kMissing);
        continue;
      }
      const auto& st = network_month(k, month).stats[*node];
      out.push_back(static_cast<double>(st.degree));
      out.push_back(st.degree_centrality);
      out.push_back(static_cast<double>(st.triangle_count));
      out.push_back(st.pagerank);
      out.push_back(st.hits_authority);
      out.push_back(st.hits_hub);
      out.push_back(st.is_articulation_point ? 1.0 : 0.0);
    }
    return out;
  }

  // Distance-1 neighbors across every network at `month`, as panel records,
  // deduplicated and excluding the borrower itself.
  std::vector<std::size_t> egonet(std::size_t record, int month) const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < networks_.size(); ++k) {
      const auto node = index_[k].node_of_record[record];
      if (!node) continue;
      for (NodeIndex v : network_month(k, month).undirected[*node]) {
        const auto r = index_[k].record_of_node[v];
        if (r && *r != record) out.push_back(*r);
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  // SOC_INT columns: egonet mean/SD of each neighbor FIN feature. Neighbors
  // unobserved at `month` are skipped.
  std::vector<double> socint_features(std::size_t record, int month) const {
    std::vector<FinVector> nb;
    for (std::size_t r : egonet(record, month))
      if (const auto* s = panel_.state(r, month)) nb.push_back(fin_features(*s));
    return aggregate_egonet(nb);
  }

  std::vector<double> socint_hist_features(std::size_t record, int month, int history_start) const {
    std::vector<std::vector<double>> monthly;
    int max_w = 0;
    for (int w : opt_.windows) max_w = std::max(max_w, w);
    for (int m = window_begin(month, max_w, history_start); m <= month; ++m)
      monthly.push_back(socint_features(record, m));
    return window_aggregate(monthly, opt_.windows);
  }

  struct Block {
    FeatureGroup group;
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;  // rows[i] has names.size() values
  };

  // Feature blocks for every requested group, one row per observation.
  std::vector<Block> build_blocks(std::span<const Observation> obs,
                                  std::span<const FeatureGroup> groups) const {
    std::vector<Block> blocks;
    for (FeatureGroup g : groups) {
      Block b{g, names_for(g), {}};
      b.rows.resize(obs.size());
      blocks.push_back(std::move(b));
    }
    // Warm the caches serially so workers only read.
    for (const auto& o : obs) {
      int max_w = 0;
      for (int w : opt_.windows) max_w = std::max(max_w, w);
      for (int m = window_begin(o.month, max_w, o.history_start); m <= o.month; ++m)
        for (std::size_t k = 0; k < networks_.size(); ++k) network_month(k, m);
    }
    parallel_for(obs.size(), opt_.threads, [&](std::size_t i) {
      const auto& o = obs[i];
      for (auto& b : blocks) {
        switch (b.group) {
          case FeatureGroup::kFin: {
            const auto v = fin_features(panel_, o.record, o.month);
            b.rows[i].assign(v.begin(), v.end());
            break;
          }
          case FeatureGroup::kFinHist:
            b.rows[i] = fin_hist_features(panel_, o.record, o.month, o.history_start, opt_.windows);
            break;
          case FeatureGroup::kNodeStats:
            b.rows[i] = node_stat_features(o.record, o.month);
            break;
          case FeatureGroup::kSocInt:
            b.rows[i] = socint_features(o.record, o.month);
            break;
          case FeatureGroup::kSocIntHist:
            b.rows[i] = socint_hist_features(o.record, o.month, o.history_start);
            break;
        }
      }
    });
    return blocks;
  }

  std::vector<std::string> names_for(FeatureGroup g) const {
    switch (g) {
      case FeatureGroup::kFin: return fin_names();
      case FeatureGroup::kFinHist: return fin_hist_names(opt_.windows);
      case FeatureGroup::kNodeStats: return node_stat_names();
      case FeatureGroup::kSocInt: return socint_names();
      case FeatureGroup::kSocIntHist: return socint_hist_names(opt_.windows);
    }
    return {};
  }

 private:
  struct NetworkIndex {
    bool is_static = false;
    std::vector<std::optional<NodeIndex>> node_of_record;
    std::vector<std::optional<std::size_t>> record_of_node;
  };
  struct NetworkMonth {
    graphstats::Adjacency undirected;
    std::vector<graphstats::NodeStatsRow> stats;
  };

  const NetworkMonth& network_month(std::size_t k, int month) const {
    const int key = index_[k].is_static ? 0 : month;
    std::lock_guard lock(mu_);
    auto& slot = cache_[{k, key}];
    if (!slot) {
      auto nm = std::make_unique<NetworkMonth>();
      const SocialGraph sl = slice(*networks_[k], month);
      nm->undirected = graphstats::undirected_projection(sl);
      nm->stats = graphstats::node_stats(sl, opt_.node_stats);
      slot = std::move(nm);
    }
    return *slot;
  }

  const BorrowerPanel& panel_;
  std::vector<const SocialGraph*> networks_;
  FeatureOptions opt_;
  std::vector<NetworkIndex> index_;
  mutable std::mutex mu_;
  mutable std::map<std::pair<std::size_t, int>, std::unique_ptr<NetworkMonth>> cache_;
};

// Concatenates the requested groups' blocks into a matrix with columns
// ordered by (group, name).
inline FeatureMatrix assemble(std::span<const std::string> row_ids,
                              std::span<const FeatureBuilder::Block> blocks,
                              std::span<const FeatureGroup> requested) {
  if (requested.empty()) throw SchemaError("no feature groups requested");
  std::vector<FeatureGroup> want(requested.begin(), requested.end());
  std::sort(want.begin(), want.end());
  want.erase(std::unique(want.begin(), want.end()), want.end());
  FeatureMatrix out;
  out.row_ids.assign(row_ids.begin(), row_ids.end());
  for (FeatureGroup g : want) {
    const auto it = std::find_if(blocks.begin(), blocks.end(),
                                 [&](const auto& b) { return b.group == g; });
    if (it == blocks.end())
      throw SchemaError("feature group " + std::string(to_string(g)) + " was not built");
    std::vector<std::size_t> order(it->names.size());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return it->names[a] < it->names[b]; });
    for (std::size_t j : order) {
      FeatureColumn col{it->names[j], g, {}};
      col.values.reserve(row_ids.size());
      for (const auto& row : it->rows) col.values.push_back(row.at(j));
      out.columns.push_back(std::move(col));
    }
  }
  out.validate();
  return out;
}

// Builds the matrix for the requested groups in one step.
inline FeatureMatrix build_matrix(const FeatureBuilder& builder, std::span<const Observation> obs,
                                  std::span<const FeatureGroup> groups) {
  std::vector<std::string> ids;
  ids.reserve(obs.size());
  for (const auto& o : obs) ids.push_back(builder.panel().records()[o.record].id);
  const auto blocks = builder.build_blocks(obs, groups);
  return assemble(ids, blocks, groups);
}

}  // namespace credyn::featurelab
