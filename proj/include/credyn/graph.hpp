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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "credyn/common.hpp"
#include "credyn/panel.hpp"

namespace credyn {

enum class EdgeType : std::uint8_t {
  kOwnership,    // person -> company
  kEmployment,   // person -> company
  kTransaction,  // company -> company
  kMarriage,     // undirected
  kParentChild,  // parent -> child
};

inline constexpr std::string_view kEdgeTypeNames[] = {"OWNERSHIP", "EMPLOYMENT", "TRANSACTION",
                                                      "MARRIAGE", "PARENT_CHILD"};

inline std::string_view to_string(EdgeType t) { return kEdgeTypeNames[static_cast<int>(t)]; }

inline std::optional<EdgeType> parse_edge_type(std::string_view s) {
  for (int i = 0; i < 5; ++i)
    if (kEdgeTypeNames[i] == s) return static_cast<EdgeType>(i);
  return std::nullopt;
}

inline bool is_undirected(EdgeType t) { return t == EdgeType::kMarriage; }

using NodeIndex = std::uint32_t;

struct Edge {
  NodeIndex src = 0;
  NodeIndex dst = 0;
  EdgeType type = EdgeType::kMarriage;
  std::optional<int> valid_from;  // inclusive; nullopt = unbounded
  std::optional<int> valid_to;    // inclusive; nullopt = unbounded

  bool valid_at(int month) const {
    return (!valid_from || *valid_from <= month) && (!valid_to || month <= *valid_to);
  }
  bool is_static() const { return !valid_from && !valid_to; }
  bool operator==(const Edge&) const = default;
};

// Typed heterogeneous graph over persons and companies. Edges may carry a
// monthly validity interval; edges without one are always present.
class SocialGraph {
 public:
  struct Node {
    std::string id;
    NodeKind kind = NodeKind::kPerson;
    bool operator==(const Node&) const = default;
  };

  SocialGraph() = default;
  explicit SocialGraph(std::string name) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }
  std::size_t num_nodes() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }

  NodeIndex add_node(std::string id, NodeKind kind) {
    auto [it, inserted] = index_.try_emplace(id, static_cast<NodeIndex>(nodes_.size()));
    if (!inserted) throw Error("duplicate node id " + id);
    nodes_.push_back(Node{std::move(id), kind});
    return it->second;
  }

  // Adds the node if absent; returns its index either way.
  NodeIndex ensure_node(const std::string& id, NodeKind kind) {
    if (auto i = find(id)) return *i;
    return add_node(id, kind);
  }

  void add_edge(const Edge& e) {
    if (e.src >= nodes_.size() || e.dst >= nodes_.size())
      throw Error("edge endpoint out of range in graph " + name_);
    if (e.valid_from && e.valid_to && *e.valid_from > *e.valid_to)
      throw Error("edge validity interval reversed in graph " + name_);
    edges_.push_back(e);
  }

  std::optional<NodeIndex> find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  bool operator==(const SocialGraph& o) const {
    return name_ == o.name_ && nodes_ == o.nodes_ && edges_ == o.edges_;
  }

 private:
  std::string name_;
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::unordered_map<std::string, NodeIndex> index_;
};

// Graph restricted to edges valid at `month`; node set unchanged.
inline SocialGraph slice(const SocialGraph& g, int month) {
  SocialGraph out(g.name());
  for (const auto& n : g.nodes()) out.add_node(n.id, n.kind);
  for (const auto& e : g.edges())
    if (e.valid_at(month)) out.add_edge(e);
  return out;
}

}  // namespace credyn
