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
#include <cstddef>
#include <vector>

#include "credyn/graph.hpp"

namespace credyn::graphstats {

using Adjacency = std::vector<std::vector<NodeIndex>>;

// Undirected simple projection: no self-loops, no parallel edges, sorted lists.
inline Adjacency undirected_projection(const SocialGraph& g) {
  Adjacency adj(g.num_nodes());
  for (const auto& e : g.edges()) {
    if (e.src == e.dst) continue;
    adj[e.src].push_back(e.dst);
    adj[e.dst].push_back(e.src);
  }
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  return adj;
}

// Directed simple projection (out-lists). Undirected edge types contribute
// both arcs; self-loops are dropped.
inline Adjacency directed_projection(const SocialGraph& g) {
  Adjacency out(g.num_nodes());
  for (const auto& e : g.edges()) {
    if (e.src == e.dst) continue;
    out[e.src].push_back(e.dst);
    if (is_undirected(e.type)) out[e.dst].push_back(e.src);
  }
  for (auto& a : out) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  return out;
}

struct IterativeResult {
  std::vector<double> values;
  int iterations = 0;
  bool converged = true;
};

struct PageRankOptions {
  double damping = 0.85;
  double tol = 1e-8;
  int max_iter = 200;
};

// Power iteration on the directed projection; mass of dangling nodes is
// redistributed uniformly. Converged when the L1 step falls below tol.
inline IterativeResult pagerank(const Adjacency& out, const PageRankOptions& opt = {}) {
  const std::size_t n = out.size();
  IterativeResult res;
  if (n == 0) return res;
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> x(n, inv_n), next(n);
  res.converged = false;
  for (res.iterations = 0; res.iterations < opt.max_iter;) {
    ++res.iterations;
    double dangling = 0.0;
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t u = 0; u < n; ++u) {
      if (out[u].empty()) {
        dangling += x[u];
        continue;
      }
      const double share = x[u] / static_cast<double>(out[u].size());
      for (NodeIndex v : out[u]) next[v] += share;
    }
    const double teleport = (1.0 - opt.damping) * inv_n + opt.damping * dangling * inv_n;
    double delta = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      next[v] = opt.damping * next[v] + teleport;
      delta += std::abs(next[v] - x[v]);
    }
    x.swap(next);
    if (delta < opt.tol) {
      res.converged = true;
      break;
    }
  }
  double total = 0.0;
  for (double v : x) total += v;
  for (double& v : x) v /= total;
  res.values = std::move(x);
  return res;
}

inline IterativeResult pagerank(const SocialGraph& g, const PageRankOptions& opt = {}) {
  return pagerank(directed_projection(g), opt);
}

struct HitsResult {
  std::vector<double> authority;
  std::vector<double> hub;
  int iterations = 0;
  bool converged = true;
};

struct HitsOptions {
  double tol = 1e-8;
  // Family graphs made of many similar components mix slowly; about 1,000
  // steps are typical there.
  int max_iter = 2000;
};

namespace detail {
inline bool normalize_l2(std::vector<double>& v) {
  double ss = 0.0;
  for (double x : v) ss += x * x;
  if (ss <= 0.0) return false;
  const double inv = 1.0 / std::sqrt(ss);
  for (double& x : v) x *= inv;
  return true;
}
}  // namespace detail

// Alternating authority/hub updates from a uniform hub start, each vector
// L2-normalised every step. A graph with no arcs yields all-zero scores.
inline HitsResult hits(const Adjacency& out, const HitsOptions& opt = {}) {
  const std::size_t n = out.size();
  HitsResult res;
  res.authority.assign(n, 0.0);
  res.hub.assign(n, 0.0);
  bool any_arc = false;
  for (const auto& a : out) any_arc = any_arc || !a.empty();
  if (!any_arc) return res;

  std::vector<double> hub(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> auth(n, 0.0), next_auth(n), next_hub(n);
  res.converged = false;
  for (res.iterations = 0; res.iterations < opt.max_iter;) {
    ++res.iterations;
    std::fill(next_auth.begin(), next_auth.end(), 0.0);
    for (std::size_t u = 0; u < n; ++u)
      for (NodeIndex v : out[u]) next_auth[v] += hub[u];
    detail::normalize_l2(next_auth);
    for (std::size_t u = 0; u < n; ++u) {
      double s = 0.0;
      for (NodeIndex v : out[u]) s += next_auth[v];
      next_hub[u] = s;
    }
    detail::normalize_l2(next_hub);
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      delta += std::abs(next_auth[i] - auth[i]) + std::abs(next_hub[i] - hub[i]);
    auth.swap(next_auth);
    hub.swap(next_hub);
    if (delta < opt.tol) {
      res.converged = true;
      break;
    }
  }
  res.authority = std::move(auth);
  res.hub = std::move(hub);
  return res;
}

inline HitsResult hits(const SocialGraph& g, const HitsOptions& opt = {}) {
  return hits(directed_projection(g), opt);
}

// Triangles through each node on the undirected projection.
inline std::vector<std::size_t> triangle_counts(const Adjacency& adj) {
  std::vector<std::size_t> tri(adj.size(), 0);
  for (std::size_t u = 0; u < adj.size(); ++u) {
    std::size_t links = 0;
    for (NodeIndex v : adj[u]) {
      // |N(u) ∩ N(v)| by sorted merge.
      const auto& a = adj[u];
      const auto& b = adj[v];
      std::size_t i = 0, j = 0;
      while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
          ++i;
        } else if (b[j] < a[i]) {
          ++j;
        } else {
          ++links;
          ++i;
          ++j;
        }
      }
    }
    tri[u] = links / 2;
  }
  return tri;
}

// Articulation points of the undirected projection (iterative Tarjan
// low-link, so deep paths do not overflow the stack).
inline std::vector<bool> articulation_points(const Adjacency& adj) {
  const std::size_t n = adj.size();
  constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
  std::vector<std::size_t> disc(n, kUnvisited), low(n, 0), parent(n, kUnvisited), child_count(n, 0);
  std::vector<bool> is_ap(n, false);
  struct Frame {
    std::size_t node;
    std::size_t next_edge;
  };
  std::vector<Frame> stack;
  std::size_t timer = 0;
  for (std::size_t root = 0; root < n; ++root) {
    if (disc[root] != kUnvisited) continue;
    disc[root] = low[root] = timer++;
    stack.push_back({root, 0});
    while (!stack.empty()) {
      Frame& f = stack.back();
      const std::size_t u = f.node;
      if (f.next_edge < adj[u].size()) {
        const std::size_t v = adj[u][f.next_edge++];
        if (disc[v] == kUnvisited) {
          parent[v] = u;
          ++child_count[u];
          disc[v] = low[v] = timer++;
          stack.push_back({v, 0});
        } else if (v != parent[u]) {
          low[u] = std::min(low[u], disc[v]);
        }
        continue;
      }
      stack.pop_back();
      if (parent[u] != kUnvisited) {
        const std::size_t p = parent[u];
        low[p] = std::min(low[p], low[u]);
        if (parent[p] != kUnvisited && low[u] >= disc[p]) is_ap[p] = true;
      }
    }
    is_ap[root] = child_count[root] > 1;
  }
  return is_ap;
}

inline std::vector<NodeIndex> articulation_points(const SocialGraph& g) {
  const auto flags = articulation_points(undirected_projection(g));
  std::vector<NodeIndex> out;
  for (std::size_t i = 0; i < flags.size(); ++i)
    if (flags[i]) out.push_back(static_cast<NodeIndex>(i));
  return out;
}

struct NodeStatsRow {
  std::size_t degree = 0;
  double degree_centrality = 0.0;
  std::size_t triangle_count = 0;
  double pagerank = 0.0;
  double hits_authority = 0.0;
  double hits_hub = 0.0;
  bool is_articulation_point = false;
};

struct NodeStatsOptions {
  PageRankOptions pagerank;
  HitsOptions hits;
};

// One row per node, indexed like g.nodes().
inline std::vector<NodeStatsRow> node_stats(const SocialGraph& g, const NodeStatsOptions& opt = {}) {
  const std::size_t n = g.num_nodes();
  const Adjacency und = undirected_projection(g);
  const Adjacency dir = directed_projection(g);
  const auto tri = triangle_counts(und);
  const auto ap = articulation_points(und);
  const auto pr = pagerank(dir, opt.pagerank);
  const auto hs = hits(dir, opt.hits);

  std::vector<NodeStatsRow> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = rows[i];
    r.degree = und[i].size();
    r.degree_centrality = n >= 2 ? static_cast<double>(r.degree) / static_cast<double>(n - 1) : 0.0;
    r.triangle_count = tri[i];
    r.pagerank = pr.values[i];
    r.hits_authority = hs.authority[i];
    r.hits_hub = hs.hub[i];
    r.is_articulation_point = ap[i];
  }
  return rows;
}

}  // namespace credyn::graphstats
