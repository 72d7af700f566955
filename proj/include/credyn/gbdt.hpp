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
#include <charconv>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "credyn/common.hpp"
#include "credyn/evalkit.hpp"
#include "credyn/feature_matrix.hpp"

namespace credyn::gbdt {

struct HyperParams {
  int n_trees = 100;
  double learning_rate = 0.1;
  int min_data_in_leaf = 20;
  int max_depth = 6;
  double l2_leaf_reg = 1.0;

  void validate() const {
    if (n_trees < 0) throw ConfigError("n_trees", "must be non-negative");
    if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate", "must be non-negative");
    if (min_data_in_leaf < 1) throw ConfigError("min_data_in_leaf", "must be at least 1");
    if (max_depth < 0) throw ConfigError("max_depth", "must be non-negative");
    if (!(l2_leaf_reg >= 0.0)) throw ConfigError("l2_leaf_reg", "must be non-negative");
  }
  bool operator==(const HyperParams&) const = default;
};

struct TreeNode {
  int left = -1;   // -1 marks a leaf
  int right = -1;
  int feature = -1;
  double threshold = 0.0;     // x <= threshold goes left
  bool default_left = false;  // direction of missing values
  double weight = 0.0;        // leaf value before learning-rate scaling
  double cover = 0.0;         // training rows reaching the node

  bool is_leaf() const { return left < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  // `value(f)` returns feature f of the row being routed.
  template <typename Value>
  int leaf_index(Value&& value) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
      const auto& n = nodes[static_cast<std::size_t>(i)];
      const double x = value(n.feature);
      const bool go_left = is_missing(x) ? n.default_left : x <= n.threshold;
      i = go_left ? n.left : n.right;
    }
    return i;
  }
  double predict(std::span<const double> row) const {
    return nodes[static_cast<std::size_t>(
                     leaf_index([&](int f) { return row[static_cast<std::size_t>(f)]; }))]
        .weight;
  }
  int depth() const {
    std::function<int(int)> rec = [&](int i) -> int {
      const auto& n = nodes[static_cast<std::size_t>(i)];
      return n.is_leaf() ? 0 : 1 + std::max(rec(n.left), rec(n.right));
    };
    return nodes.empty() ? 0 : rec(0);
  }
  bool operator==(const Tree&) const = default;
};

// Base log-odds plus learning-rate-scaled regression trees.
struct BoostedModel {
  std::vector<std::string> columns;
  double base_score = 0.0;
  double learning_rate = 0.0;
  std::vector<Tree> trees;

  double predict_margin(std::span<const double> row) const {
    if (row.size() != columns.size())
      throw SchemaError("row has " + std::to_string(row.size()) + " values, model expects " +
                        std::to_string(columns.size()));
    double s = 0.0;
    for (const auto& t : trees) s += t.predict(row);
    return base_score + learning_rate * s;
  }
  double predict_proba(std::span<const double> row) const { return sigmoid(predict_margin(row)); }

  // The model restricted to its first n trees.
  BoostedModel truncated(std::size_t n) const {
    BoostedModel m{columns, base_score, learning_rate, {}};
    m.trees.assign(trees.begin(), trees.begin() + static_cast<std::ptrdiff_t>(std::min(n, trees.size())));
    return m;
  }
  bool operator==(const BoostedModel&) const = default;
};

// Column-major dense view of selected rows of a feature matrix.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double at(std::size_t r, std::size_t c) const { return data[c * rows + r]; }
  std::span<const double> column(std::size_t c) const { return {data.data() + c * rows, rows}; }
  std::vector<double> row(std::size_t r) const {
    std::vector<double> out(cols);
    for (std::size_t c = 0; c < cols; ++c) out[c] = at(r, c);
    return out;
  }

  static DenseMatrix from(const FeatureMatrix& m) {
    std::vector<std::size_t> idx(m.rows());
    std::iota(idx.begin(), idx.end(), 0);
    return from(m, idx);
  }
  static DenseMatrix from(const FeatureMatrix& m, std::span<const std::size_t> row_idx) {
    DenseMatrix d;
    d.rows = row_idx.size();
    d.cols = m.cols();
    d.data.resize(d.rows * d.cols);
    for (std::size_t c = 0; c < d.cols; ++c)
      for (std::size_t r = 0; r < d.rows; ++r) d.data[c * d.rows + r] = m.columns[c].values[row_idx[r]];
    return d;
  }
};

inline double logloss(std::span<const double> margins, std::span<const int> labels) {
  double s = 0.0;
  for (std::size_t i = 0; i < margins.size(); ++i) {
    const double m = margins[i];
    // log(1 + exp(-m)) for y=1, log(1 + exp(m)) for y=0, computed stably.
    const double z = labels[i] == 1 ? -m : m;
    s += z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  }
  return s / static_cast<double>(margins.size());
}

struct TrainOptions {
  // When set, receives the training logloss after every round (index 0 is
  // the base score alone).
  std::vector<double>* loss_trace = nullptr;
};

namespace detail {

inline constexpr double kMinGain = 1e-12;

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
  bool default_left = false;
  bool valid() const { return feature >= 0; }
};

struct Sums {
  double g = 0.0, h = 0.0;
  std::size_t n = 0;
};

struct GradPair {
  double g = 0.0, h = 0.0;
};

// Non-missing rows of one feature in ascending value order (stable in row
// index), with the values stored alongside.
struct SortedColumn {
  std::vector<std::uint32_t> rows;
  std::vector<double> values;
  bool has_missing = false;
};

inline std::vector<SortedColumn> presort(const DenseMatrix& x) {
  std::vector<SortedColumn> out(x.cols);
  for (std::size_t f = 0; f < x.cols; ++f) {
    const auto col = x.column(f);
    auto& sc = out[f];
    for (std::uint32_t i = 0; i < x.rows; ++i) {
      if (is_missing(col[i])) sc.has_missing = true;
      else sc.rows.push_back(i);
    }
    std::stable_sort(sc.rows.begin(), sc.rows.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
    sc.values.reserve(sc.rows.size());
    for (auto i : sc.rows) sc.values.push_back(col[i]);
  }
  return out;
}

inline double score(double g, double h, double lambda) { return g * g / (h + lambda); }

// Exact greedy tree growth, one depth level at a time. Each level makes one
// forward (missing right) and one backward (missing left) sweep per feature
// over pre-sorted rows, so cost per level is O(rows * features). Without
// missing values the backward sweep only revisits the forward candidates
// and is skipped.
class TreeGrower {
 public:
  TreeGrower(const DenseMatrix& x, const std::vector<SortedColumn>& sorted, const HyperParams& p)
      : x_(x), sorted_(sorted), p_(p), node_of_(x.rows), slot_(x.rows) {}

  Tree grow(std::span<const GradPair> gh) {
    Tree tree;
    tree.nodes.emplace_back();
    std::fill(node_of_.begin(), node_of_.end(), 0);
    std::vector<int> level{0};
    for (int depth = 0; !level.empty(); ++depth) {
      std::vector<Sums> totals(tree.nodes.size());
      for (std::size_t i = 0; i < x_.rows; ++i) {
        auto& t = totals[static_cast<std::size_t>(node_of_[i])];
        t.g += gh[i].g;
        t.h += gh[i].h;
        ++t.n;
      }
      for (int nid : level) tree.nodes[static_cast<std::size_t>(nid)].cover =
          static_cast<double>(totals[static_cast<std::size_t>(nid)].n);

      std::vector<SplitCandidate> best(level.size());
      if (depth < p_.max_depth) best = find_splits(level, totals, gh);

      std::vector<int> next;
      std::vector<int> split_slot(tree.nodes.size(), -1);
      for (std::size_t s = 0; s < level.size(); ++s) {
        const int nid = level[s];
        const Sums& t = totals[static_cast<std::size_t>(nid)];
        if (!best[s].valid()) {
          tree.nodes[static_cast<std::size_t>(nid)].weight = -t.g / (t.h + p_.l2_leaf_reg);
          continue;
        }
        const int l = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        auto& n = tree.nodes[static_cast<std::size_t>(nid)];
        n.left = l;
        n.right = l + 1;
        n.feature = best[s].feature;
        n.threshold = best[s].threshold;
        n.default_left = best[s].default_left;
        split_slot[static_cast<std::size_t>(nid)] = static_cast<int>(s);
        next.push_back(l);
        next.push_back(l + 1);
      }
      for (std::size_t i = 0; i < x_.rows; ++i) {
        const int nid = node_of_[i];
        if (split_slot[static_cast<std::size_t>(nid)] < 0) continue;
        const auto& n = tree.nodes[static_cast<std::size_t>(nid)];
        const double v = x_.at(i, static_cast<std::size_t>(n.feature));
        const bool go_left = is_missing(v) ? n.default_left : v <= n.threshold;
        node_of_[i] = go_left ? n.left : n.right;
      }
      level = std::move(next);
    }
    return tree;
  }

  // Leaf reached by each training row after grow().
  const std::vector<int>& node_of() const { return node_of_; }

 private:
  std::vector<SplitCandidate> find_splits(const std::vector<int>& level, const std::vector<Sums>& totals,
                                          std::span<const GradPair> gh) {
    const double lambda = p_.l2_leaf_reg;
    const std::size_t min_leaf = static_cast<std::size_t>(p_.min_data_in_leaf);
    const std::size_t nl = level.size();
    std::vector<int> slot_of(totals.size(), -1);
    std::vector<double> parent(nl);
    std::vector<Sums> tot(nl);
    for (std::size_t s = 0; s < nl; ++s) {
      const auto nid = static_cast<std::size_t>(level[s]);
      tot[s] = totals[nid];
      parent[s] = score(tot[s].g, tot[s].h, lambda);
      if (tot[s].n >= 2 * min_leaf) slot_of[nid] = static_cast<int>(s);
    }
    for (std::size_t i = 0; i < x_.rows; ++i) slot_[i] = slot_of[static_cast<std::size_t>(node_of_[i])];

    std::vector<SplitCandidate> best(nl);
    std::vector<Sums> acc(nl);
    std::vector<double> last(nl);

    auto consider = [&](std::size_t s, const Sums& left, const Sums& right, int f, double thr,
                        bool default_left) {
      if (left.n < min_leaf || right.n < min_leaf) return;
      const double gain = score(left.g, left.h, lambda) + score(right.g, right.h, lambda) - parent[s];
      if (gain > kMinGain && gain > best[s].gain) best[s] = {gain, f, thr, default_left};
    };
    auto minus = [](const Sums& a, const Sums& b) { return Sums{a.g - b.g, a.h - b.h, a.n - b.n}; };

    for (std::size_t f = 0; f < x_.cols; ++f) {
      const auto& sc = sorted_[f];
      const std::size_t m = sc.rows.size();
      const int fi = static_cast<int>(f);
      // Forward: left = values <= threshold, missing goes right.
      std::fill(acc.begin(), acc.end(), Sums{});
      for (std::size_t k = 0; k < m; ++k) {
        const std::uint32_t i = sc.rows[k];
        const int sl = slot_[i];
        if (sl < 0) continue;
        const auto s = static_cast<std::size_t>(sl);
        const double v = sc.values[k];
        Sums& a = acc[s];
        if (a.n > 0 && v > last[s]) consider(s, a, minus(tot[s], a), fi, last[s], false);
        a.g += gh[i].g;
        a.h += gh[i].h;
        ++a.n;
        last[s] = v;
      }
      if (!sc.has_missing) continue;
      // Present-versus-missing split.
      for (std::size_t s = 0; s < nl; ++s)
        if (acc[s].n > 0 && acc[s].n < tot[s].n) consider(s, acc[s], minus(tot[s], acc[s]), fi, last[s], false);
      // Backward: right = values > threshold, missing goes left.
      std::fill(acc.begin(), acc.end(), Sums{});
      for (std::size_t k = m; k-- > 0;) {
        const std::uint32_t i = sc.rows[k];
        const int sl = slot_[i];
        if (sl < 0) continue;
        const auto s = static_cast<std::size_t>(sl);
        const double v = sc.values[k];
        Sums& a = acc[s];
        if (a.n > 0 && v < last[s] && a.n < tot[s].n) consider(s, minus(tot[s], a), a, fi, v, true);
        a.g += gh[i].g;
        a.h += gh[i].h;
        ++a.n;
        last[s] = v;
      }
    }
    return best;
  }

  const DenseMatrix& x_;
  const std::vector<SortedColumn>& sorted_;
  const HyperParams& p_;
  std::vector<int> node_of_;
  std::vector<int> slot_;
};

inline void check_training_input(const DenseMatrix& x, std::span<const int> labels) {
  if (x.rows == 0) throw TrainingError("training matrix is empty");
  if (labels.size() != x.rows) throw TrainingError("label count does not match rows");
  if (x.rows < 2) throw TrainingError("need at least two training rows");
  bool pos = false, neg = false;
  for (int y : labels) {
    if (y == 1) pos = true;
    else if (y == 0) neg = true;
    else throw TrainingError("labels must be 0 or 1");
  }
  if (!pos || !neg) throw TrainingError("training labels contain a single class");
}

}  // namespace detail

// Gradient boosting with logistic loss and Newton leaf weights
// -G / (H + l2_leaf_reg).
inline BoostedModel train(const DenseMatrix& x, std::span<const int> labels,
                          std::vector<std::string> columns, const HyperParams& p,
                          const TrainOptions& opt = {}) {
  p.validate();
  detail::check_training_input(x, labels);
  if (columns.size() != x.cols) throw SchemaError("column names do not match matrix width");

  const std::size_t n = x.rows;
  double mean = 0.0;
  for (int y : labels) mean += y;
  mean /= static_cast<double>(n);

  BoostedModel model;
  model.columns = std::move(columns);
  model.base_score = logit(mean);
  model.learning_rate = p.learning_rate;

  const auto sorted = detail::presort(x);
  std::vector<double> margin(n, model.base_score);
  std::vector<detail::GradPair> gh(n);
  if (opt.loss_trace) opt.loss_trace->push_back(logloss(margin, labels));
  detail::TreeGrower grower(x, sorted, p);
  for (int t = 0; t < p.n_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const double pr = sigmoid(margin[i]);
      gh[i] = {pr - labels[i], pr * (1.0 - pr)};
    }
    Tree tree = grower.grow(gh);
    const auto& leaf = grower.node_of();
    for (std::size_t i = 0; i < n; ++i)
      margin[i] += p.learning_rate * tree.nodes[static_cast<std::size_t>(leaf[i])].weight;
    model.trees.push_back(std::move(tree));
    if (opt.loss_trace) opt.loss_trace->push_back(logloss(margin, labels));
  }
  return model;
}

inline BoostedModel train(const FeatureMatrix& m, std::span<const int> labels, const HyperParams& p,
                          const TrainOptions& opt = {}) {
  return train(DenseMatrix::from(m), labels, m.column_names(), p, opt);
}

// Positions of the model's columns inside `m`; SchemaError when one is absent.
inline std::vector<std::size_t> bind_columns(const BoostedModel& model, const FeatureMatrix& m) {
  std::vector<std::size_t> idx;
  idx.reserve(model.columns.size());
  for (const auto& c : model.columns) {
    auto j = m.column_index(c);
    if (!j) throw SchemaError("input lacks model column " + c);
    idx.push_back(*j);
  }
  return idx;
}

inline std::vector<double> gather_row(const FeatureMatrix& m, std::span<const std::size_t> cols,
                                      std::size_t r) {
  std::vector<double> row(cols.size());
  for (std::size_t k = 0; k < cols.size(); ++k) row[k] = m.columns[cols[k]].values[r];
  return row;
}

inline std::vector<double> predict_margins(const BoostedModel& model, const DenseMatrix& x) {
  if (x.cols != model.columns.size()) throw SchemaError("matrix width does not match model");
  std::vector<double> out(x.rows, 0.0);
  for (const auto& t : model.trees)
    for (std::size_t r = 0; r < x.rows; ++r)
      out[r] += t.nodes[static_cast<std::size_t>(t.leaf_index([&](int f) {
                  return x.at(r, static_cast<std::size_t>(f));
                }))].weight;
  for (double& v : out) v = model.base_score + model.learning_rate * v;
  return out;
}

inline std::vector<double> predict_margins(const BoostedModel& model, const FeatureMatrix& m) {
  const auto cols = bind_columns(model, m);
  std::vector<double> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = model.predict_margin(gather_row(m, cols, r));
  return out;
}

// ---------------------------------------------------------------------------
// Text serialization
//
//   credyn_boosted_model 1
//   columns <C>
//   <column name>                      (C lines, model column order)
//   base_score <double>
//   learning_rate <double>
//   trees <T>
//   tree <t> <N>                       (then N node lines, node 0 = root)
//   <left> <right> <feature> <threshold> <default_left 0|1> <weight> <cover>
//   end
//
// Doubles use the shortest round-trip decimal form; leaves have
// left = right = feature = -1.
// ---------------------------------------------------------------------------

namespace detail {
inline std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}
inline double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ParseError("model", line, "bad number '" + s + "'");
  return v;
}
}  // namespace detail

inline void write_model(std::ostream& os, const BoostedModel& m) {
  os << "credyn_boosted_model 1\n";
  os << "columns " << m.columns.size() << "\n";
  for (const auto& c : m.columns) {
    if (c.empty() || c.find_first_of(" \t\r\n") != std::string::npos)
      throw SchemaError("column name not serializable: '" + c + "'");
    os << c << "\n";
  }
  os << "base_score " << detail::fmt(m.base_score) << "\n";
  os << "learning_rate " << detail::fmt(m.learning_rate) << "\n";
  os << "trees " << m.trees.size() << "\n";
  for (std::size_t t = 0; t < m.trees.size(); ++t) {
    const auto& tree = m.trees[t];
    os << "tree " << t << " " << tree.nodes.size() << "\n";
    for (const auto& n : tree.nodes)
      os << n.left << " " << n.right << " " << n.feature << " " << detail::fmt(n.threshold) << " "
         << (n.default_left ? 1 : 0) << " " << detail::fmt(n.weight) << " " << detail::fmt(n.cover)
         << "\n";
  }
  os << "end\n";
}

inline std::string to_text(const BoostedModel& m) {
  std::ostringstream os;
  write_model(os, m);
  return os.str();
}

inline BoostedModel read_model(std::istream& is) {
  std::size_t line_no = 0;
  std::string line;
  auto next = [&]() -> std::vector<std::string> {
    if (!std::getline(is, line)) throw ParseError("model", line_no + 1, "unexpected end of input");
    ++line_no;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    return tok;
  };
  auto expect = [&](const std::vector<std::string>& tok, const char* key, std::size_t n) {
    if (tok.size() != n || tok[0] != key)
      throw ParseError("model", line_no, std::string("expected '") + key + "'");
  };
  auto to_int = [&](const std::string& s) {
    long v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
      throw ParseError("model", line_no, "bad integer '" + s + "'");
    return v;
  };
  auto tok = next();
  if (tok.size() != 2 || tok[0] != "credyn_boosted_model" || tok[1] != "1")
    throw ParseError("model", line_no, "not a credyn model (version 1)");
  BoostedModel m;
  tok = next();
  expect(tok, "columns", 2);
  const long ncol = to_int(tok[1]);
  for (long c = 0; c < ncol; ++c) {
    tok = next();
    if (tok.size() != 1) throw ParseError("model", line_no, "bad column name line");
    m.columns.push_back(tok[0]);
  }
  tok = next();
  expect(tok, "base_score", 2);
  m.base_score = detail::parse_double(tok[1], line_no);
  tok = next();
  expect(tok, "learning_rate", 2);
  m.learning_rate = detail::parse_double(tok[1], line_no);
  tok = next();
  expect(tok, "trees", 2);
  const long ntrees = to_int(tok[1]);
  for (long t = 0; t < ntrees; ++t) {
    tok = next();
    expect(tok, "tree", 3);
    const long nn = to_int(tok[2]);
    Tree tree;
    for (long k = 0; k < nn; ++k) {
      tok = next();
      if (tok.size() != 7) throw ParseError("model", line_no, "node line needs 7 fields");
      TreeNode n;
      n.left = static_cast<int>(to_int(tok[0]));
      n.right = static_cast<int>(to_int(tok[1]));
      n.feature = static_cast<int>(to_int(tok[2]));
      n.threshold = detail::parse_double(tok[3], line_no);
      n.default_left = to_int(tok[4]) != 0;
      n.weight = detail::parse_double(tok[5], line_no);
      n.cover = detail::parse_double(tok[6], line_no);
      const bool leaf = n.left < 0;
      if (!leaf && (n.left >= nn || n.right < 0 || n.right >= nn || n.feature < 0 || n.feature >= ncol))
        throw ParseError("model", line_no, "node references out of range");
      tree.nodes.push_back(n);
    }
    if (tree.nodes.empty()) throw ParseError("model", line_no, "tree without nodes");
    m.trees.push_back(std::move(tree));
  }
  tok = next();
  expect(tok, "end", 1);
  return m;
}

inline BoostedModel from_text(const std::string& s) {
  std::istringstream is(s);
  return read_model(is);
}

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

struct GridSpec {
  std::vector<int> n_trees_choices{50, 100, 200};
  std::vector<double> learning_rate_choices{0.05, 0.1};
  std::vector<int> min_data_in_leaf_choices{20, 50, 100};
  int max_depth = 6;
  double l2_leaf_reg = 1.0;

  void validate() const {
    if (n_trees_choices.empty()) throw ConfigError("n_trees_choices", "grid axis is empty");
    if (learning_rate_choices.empty())
      throw ConfigError("learning_rate_choices", "grid axis is empty");
    if (min_data_in_leaf_choices.empty())
      throw ConfigError("min_data_in_leaf_choices", "grid axis is empty");
  }
};

struct GridPoint {
  HyperParams params;
  double mean_auc = std::numeric_limits<double>::quiet_NaN();
  bool ok = false;
  std::string error;
};

struct GridResult {
  HyperParams best;
  std::vector<GridPoint> table;  // every grid point, axis-major order
};

// Exhaustive k-fold search maximising mean AUC. Ties go to fewer trees, then
// the lower learning rate, then the smaller leaf minimum. For a given
// learning rate and leaf minimum one model with the largest tree count is
// trained per fold; smaller counts are evaluated on its prefixes, which are
// exactly the models those counts would train.
inline GridResult grid_search(const FeatureMatrix& m, std::span<const int> labels,
                              const GridSpec& grid, std::span<const int> fold_of, int k) {
  grid.validate();
  if (fold_of.size() != m.rows()) throw Error("fold assignment does not match rows");
  std::vector<int> tree_counts = grid.n_trees_choices;
  std::sort(tree_counts.begin(), tree_counts.end());
  tree_counts.erase(std::unique(tree_counts.begin(), tree_counts.end()), tree_counts.end());
  const int max_trees = tree_counts.back();

  GridResult res;
  for (int nt : grid.n_trees_choices)
    for (double lr : grid.learning_rate_choices)
      for (int ml : grid.min_data_in_leaf_choices)
        res.table.push_back({HyperParams{nt, lr, ml, grid.max_depth, grid.l2_leaf_reg}, {}, false, {}});

  for (double lr : grid.learning_rate_choices) {
    for (int ml : grid.min_data_in_leaf_choices) {
      std::vector<std::vector<double>> per_count(tree_counts.size());
      std::string failure;
      for (int f = 0; f < k && failure.empty(); ++f) {
        std::vector<std::size_t> tr, te;
        for (std::size_t i = 0; i < m.rows(); ++i) (fold_of[i] == f ? te : tr).push_back(i);
        try {
          std::vector<int> ytr, yte;
          for (auto i : tr) ytr.push_back(labels[i]);
          for (auto i : te) yte.push_back(labels[i]);
          const auto xtr = DenseMatrix::from(m, tr);
          const auto xte = DenseMatrix::from(m, te);
          const HyperParams hp{max_trees, lr, ml, grid.max_depth, grid.l2_leaf_reg};
          const auto model = train(xtr, ytr, m.column_names(), hp);
          // Accumulate margins tree by tree and score at each requested count.
          std::vector<double> acc(xte.rows, 0.0);
          std::size_t next_count = 0;
          if (tree_counts.front() == 0) {
            std::vector<double> margin(xte.rows, model.base_score);
            per_count[0].push_back(evalkit::auc(margin, yte));
            next_count = 1;
          }
          for (int t = 0; t < max_trees && next_count < tree_counts.size(); ++t) {
            const auto& tree = model.trees[static_cast<std::size_t>(t)];
            for (std::size_t r = 0; r < xte.rows; ++r)
              acc[r] += tree.nodes[static_cast<std::size_t>(tree.leaf_index([&](int c) {
                          return xte.at(r, static_cast<std::size_t>(c));
                        }))].weight;
            while (next_count < tree_counts.size() && tree_counts[next_count] == t + 1) {
              std::vector<double> margin(xte.rows);
              for (std::size_t r = 0; r < xte.rows; ++r)
                margin[r] = model.base_score + model.learning_rate * acc[r];
              per_count[next_count].push_back(evalkit::auc(margin, yte));
              ++next_count;
            }
          }
        } catch (const Error& e) {
          failure = e.what();
        }
      }
      for (auto& gp : res.table) {
        if (gp.params.learning_rate != lr || gp.params.min_data_in_leaf != ml) continue;
        if (!failure.empty()) {
          gp.error = failure;
          continue;
        }
        const auto ci = static_cast<std::size_t>(
            std::lower_bound(tree_counts.begin(), tree_counts.end(), gp.params.n_trees) - tree_counts.begin());
        const auto& v = per_count[ci];
        gp.mean_auc = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        gp.ok = true;
      }
    }
  }

  const GridPoint* best = nullptr;
  for (const auto& gp : res.table) {
    if (!gp.ok) continue;
    if (!best) {
      best = &gp;
      continue;
    }
    const auto key = [](const GridPoint& g) {
      return std::tuple(-g.mean_auc, g.params.n_trees, g.params.learning_rate, g.params.min_data_in_leaf);
    };
    if (key(gp) < key(*best)) best = &gp;
  }
  if (!best) throw TrainingError("every grid point failed");
  res.best = best->params;
  return res;
}

inline GridResult grid_search(const FeatureMatrix& m, std::span<const int> labels,
                              const GridSpec& grid, int k, std::uint64_t seed) {
  const auto folds = evalkit::make_folds(m.row_ids, k, seed);
  return grid_search(m, labels, grid, folds, k);
}

}  // namespace credyn::gbdt
