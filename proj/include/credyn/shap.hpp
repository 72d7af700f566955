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
#include <limits>
#include <span>
#include <vector>

#include "credyn/common.hpp"
#include "credyn/feature_matrix.hpp"
#include "credyn/gbdt.hpp"

namespace credyn::shap {

struct ShapRow {
  std::vector<double> phi;  // one per model column, margin space
  double base_value = 0.0;  // expected margin under training cover
};

namespace detail {

// Path-dependent TreeSHAP bookkeeping: the unique features on the current
// root-to-node path with the fractions of "zero" (feature absent) and "one"
// (feature present) paths flowing through them, plus permutation weights.
struct PathElement {
  int feature = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double pweight = 0.0;
};

inline void extend_path(PathElement* path, int depth, double zero_fraction, double one_fraction,
                        int feature) {
  path[depth] = {feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
  for (int i = depth - 1; i >= 0; --i) {
    path[i + 1].pweight += one_fraction * path[i].pweight * (i + 1) / static_cast<double>(depth + 1);
    path[i].pweight = zero_fraction * path[i].pweight * (depth - i) / static_cast<double>(depth + 1);
  }
}

inline void unwind_path(PathElement* path, int depth, int index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next_one_portion = path[depth].pweight;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0.0) {
      const double tmp = path[i].pweight;
      path[i].pweight = next_one_portion * (depth + 1) / ((i + 1) * one);
      next_one_portion = tmp - path[i].pweight * zero * (depth - i) / static_cast<double>(depth + 1);
    } else {
      path[i].pweight = path[i].pweight * (depth + 1) / (zero * (depth - i));
    }
  }
  for (int i = index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

// Total permutation weight if the element at `index` were unwound.
inline double unwound_path_sum(const PathElement* path, int depth, int index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next_one_portion = path[depth].pweight;
  double total = 0.0;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0.0) {
      const double tmp = next_one_portion * (depth + 1) / ((i + 1) * one);
      total += tmp;
      next_one_portion = path[i].pweight - tmp * zero * (depth - i) / static_cast<double>(depth + 1);
    } else if (zero != 0.0) {
      total += (path[i].pweight / zero) / ((depth - i) / static_cast<double>(depth + 1));
    }
  }
  return total;
}

class TreeExplainer {
 public:
  TreeExplainer(const gbdt::Tree& tree, std::span<const double> row, std::span<double> phi,
                double scale)
      : tree_(tree), row_(row), phi_(phi), scale_(scale) {
    const int d = tree.depth();
    buffer_.resize(static_cast<std::size_t>((d + 2) * (d + 3) / 2));
  }

  void run() { recurse(0, 0, buffer_.data(), 1.0, 1.0, -1); }

 private:
  void recurse(int node, int depth, PathElement* parent_path, double zero_fraction,
               double one_fraction, int feature) {
    PathElement* path = parent_path + depth + 1;
    std::copy(parent_path, parent_path + depth + 1, path);
    extend_path(path, depth, zero_fraction, one_fraction, feature);

    const auto& n = tree_.nodes[static_cast<std::size_t>(node)];
    if (n.is_leaf()) {
      for (int i = 1; i <= depth; ++i) {
        const double w = unwound_path_sum(path, depth, i);
        const auto& el = path[i];
        phi_[static_cast<std::size_t>(el.feature)] +=
            scale_ * w * (el.one_fraction - el.zero_fraction) * n.weight;
      }
      return;
    }
    const double x = row_[static_cast<std::size_t>(n.feature)];
    const bool go_left = is_missing(x) ? n.default_left : x <= n.threshold;
    const int hot = go_left ? n.left : n.right;
    const int cold = go_left ? n.right : n.left;
    const double cover = n.cover;
    const double hot_zero = tree_.nodes[static_cast<std::size_t>(hot)].cover / cover;
    const double cold_zero = tree_.nodes[static_cast<std::size_t>(cold)].cover / cover;
    double incoming_zero = 1.0, incoming_one = 1.0;

    int path_index = 0;
    for (; path_index <= depth; ++path_index)
      if (path[path_index].feature == n.feature) break;
    if (path_index != depth + 1) {
      incoming_zero = path[path_index].zero_fraction;
      incoming_one = path[path_index].one_fraction;
      unwind_path(path, depth, path_index);
      --depth;
    }
    recurse(hot, depth + 1, path, hot_zero * incoming_zero, incoming_one, n.feature);
    recurse(cold, depth + 1, path, cold_zero * incoming_zero, 0.0, n.feature);
  }

  const gbdt::Tree& tree_;
  std::span<const double> row_;
  std::span<double> phi_;
  double scale_;
  std::vector<PathElement> buffer_;
};

// Cover-weighted mean leaf value of a tree.
inline double expected_value(const gbdt::Tree& t) {
  const double root = t.nodes[0].cover;
  double s = 0.0;
  for (const auto& n : t.nodes)
    if (n.is_leaf()) s += n.weight * (root > 0 ? n.cover / root : 0.0);
  return s;
}

}  // namespace detail

inline double expected_margin(const gbdt::BoostedModel& model) {
  double s = 0.0;
  for (const auto& t : model.trees) s += detail::expected_value(t);
  return model.base_score + model.learning_rate * s;
}

// Path-dependent TreeSHAP attributions of one row (model column order).
inline ShapRow tree_shap(const gbdt::BoostedModel& model, std::span<const double> row) {
  if (row.size() != model.columns.size())
    throw SchemaError("row has " + std::to_string(row.size()) + " values, model expects " +
                      std::to_string(model.columns.size()));
  ShapRow out;
  out.phi.assign(row.size(), 0.0);
  out.base_value = expected_margin(model);
  for (const auto& t : model.trees) {
    if (t.nodes.size() <= 1) continue;
    detail::TreeExplainer(t, row, out.phi, model.learning_rate).run();
  }
  return out;
}

struct GroupImportance {
  double borrower_share = std::numeric_limits<double>::quiet_NaN();
  double network_share = std::numeric_limits<double>::quiet_NaN();
  bool defined = false;  // false when every attribution is zero
};

// Mean |phi| per feature over the sample rows, summed into borrower (FIN,
// FIN_HIST) and network groups and normalised to shares.
inline GroupImportance group_importance(const gbdt::BoostedModel& model,
                                        const gbdt::DenseMatrix& rows,
                                        std::span<const FeatureGroup> column_groups) {
  if (rows.rows == 0) throw Error("group importance needs at least one row");
  if (column_groups.size() != model.columns.size() || rows.cols != model.columns.size())
    throw SchemaError("grouping does not match model columns");
  std::vector<double> mean_abs(model.columns.size(), 0.0);
  for (std::size_t r = 0; r < rows.rows; ++r) {
    const auto row = rows.row(r);
    const auto s = tree_shap(model, row);
    for (std::size_t j = 0; j < s.phi.size(); ++j) mean_abs[j] += std::abs(s.phi[j]);
  }
  double borrower = 0.0, network = 0.0;
  for (std::size_t j = 0; j < mean_abs.size(); ++j) {
    const double v = mean_abs[j] / static_cast<double>(rows.rows);
    (is_network_group(column_groups[j]) ? network : borrower) += v;
  }
  GroupImportance g;
  const double total = borrower + network;
  if (total > 0.0) {
    g.borrower_share = borrower / total;
    g.network_share = network / total;
    g.defined = true;
  }
  return g;
}

}  // namespace credyn::shap
