// Decision trees and random forests as linear smoothers: each query row gets
// weight 1/|leaf| on the bootstrap rows sharing its leaf, averaged over trees.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "yfree/linalg.hpp"
#include "yfree/rng.hpp"

namespace yfree {

enum class TreeTask { regression, classification };

struct TreeParams {
  TreeTask task = TreeTask::regression;
  // 0 picks the task default: all features for regression, floor(sqrt(d))
  // for classification.
  int max_features = 0;
  bool bootstrap = true;
};

struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int leaf = -1;
};

struct Tree {
  std::vector<TreeNode> nodes;
  std::vector<std::vector<int>> leaf_members;  // training row ids, bootstrap multiplicity kept
  std::vector<int> bootstrap_rows;

  int leaf_of(const Mat& X, int row) const {
    int node = 0;
    while (nodes[node].leaf < 0) {
      const TreeNode& nd = nodes[node];
      node = X(row, nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
    return nodes[node].leaf;
  }
};

struct Forest {
  std::vector<Tree> trees;
  int n = 0;
  int d = 0;
  TreeParams params;
};

namespace detail {

struct TreeBuilder {
  const Mat& X;
  const Vec& y;
  TreeTask task;
  int max_features;
  int n_classes;
  Rng& rng;
  Tree tree;

  bool is_pure(const std::vector<int>& rows) const {
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (y(rows[i]) != y(rows[0])) return false;
    return true;
  }

  struct Split {
    double gain = -1.0;
    int feature = -1;
    double threshold = 0.0;
  };

  // Maximizes the standard proxy score: sum over children of (sum y)^2 / count
  // for variance reduction, sum of squared class counts over count for Gini.
  // Ties keep the first candidate encountered.
  void scan_feature(const std::vector<int>& rows, int f, Split& best) const {
    const int m = static_cast<int>(rows.size());
    std::vector<std::pair<double, double>> vals(m);
    for (int i = 0; i < m; ++i) vals[i] = {X(rows[i], f), y(rows[i])};
    std::sort(vals.begin(), vals.end());
    if (vals.front().first == vals.back().first) return;

    if (task == TreeTask::regression) {
      double total = 0.0;
      for (const auto& v : vals) total += v.second;
      const double base = total * total / m;
      double left = 0.0;
      for (int k = 1; k < m; ++k) {
        left += vals[k - 1].second;
        if (vals[k - 1].first == vals[k].first) continue;
        const double right = total - left;
        const double gain = left * left / k + right * right / (m - k) - base;
        if (gain > best.gain) {
          best.gain = gain;
          best.feature = f;
          best.threshold = 0.5 * (vals[k - 1].first + vals[k].first);
        }
      }
    } else {
      std::vector<double> total(n_classes, 0.0), left(n_classes, 0.0);
      for (const auto& v : vals) total[static_cast<int>(v.second)] += 1.0;
      double base = 0.0;
      for (double c : total) base += c * c;
      base /= m;
      for (int k = 1; k < m; ++k) {
        left[static_cast<int>(vals[k - 1].second)] += 1.0;
        if (vals[k - 1].first == vals[k].first) continue;
        double sl = 0.0, sr = 0.0;
        for (int c = 0; c < n_classes; ++c) {
          sl += left[c] * left[c];
          sr += (total[c] - left[c]) * (total[c] - left[c]);
        }
        const double gain = sl / k + sr / (m - k) - base;
        if (gain > best.gain) {
          best.gain = gain;
          best.feature = f;
          best.threshold = 0.5 * (vals[k - 1].first + vals[k].first);
        }
      }
    }
  }

  // Feature scan order: natural index order when every feature is eligible,
  // otherwise a per-node random permutation truncated to max_features
  // non-constant features.
  Split find_split(const std::vector<int>& rows) {
    const int d = static_cast<int>(X.cols());
    Split best;
    if (max_features >= d) {
      for (int f = 0; f < d; ++f) scan_feature(rows, f, best);
      return best;
    }
    std::vector<std::size_t> order = rng.permutation(static_cast<std::size_t>(d));
    int evaluated = 0;
    for (std::size_t fz : order) {
      const int f = static_cast<int>(fz);
      bool constant = true;
      for (std::size_t i = 1; i < rows.size() && constant; ++i)
        if (X(rows[i], f) != X(rows[0], f)) constant = false;
      if (constant) continue;
      scan_feature(rows, f, best);
      if (++evaluated == max_features) break;
    }
    return best;
  }

  int make_leaf(std::vector<int> rows) {
    TreeNode node;
    node.leaf = static_cast<int>(tree.leaf_members.size());
    tree.leaf_members.push_back(std::move(rows));
    tree.nodes.push_back(node);
    return static_cast<int>(tree.nodes.size()) - 1;
  }

  int build(std::vector<int> rows) {
    if (rows.size() < 2 || is_pure(rows)) return make_leaf(std::move(rows));
    Split split = find_split(rows);
    if (split.feature < 0) return make_leaf(std::move(rows));

    std::vector<int> left_rows, right_rows;
    for (int r : rows)
      (X(r, split.feature) <= split.threshold ? left_rows : right_rows).push_back(r);

    const int self = static_cast<int>(tree.nodes.size());
    TreeNode node;
    node.feature = split.feature;
    node.threshold = split.threshold;
    tree.nodes.push_back(node);
    const int left = build(std::move(left_rows));
    const int right = build(std::move(right_rows));
    tree.nodes[self].left = left;
    tree.nodes[self].right = right;
    return self;
  }
};

}  // namespace detail

inline Forest fit_forest(const Mat& X, const Vec& y_build, int n_T, std::uint64_t seed,
                         TreeParams params = {}) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  if (n_T < 1) throw std::invalid_argument("fit_forest: need at least one tree");
  if (y_build.size() != n) throw std::invalid_argument("fit_forest: response length mismatch");
  if (n < 1 || d < 1) throw std::invalid_argument("fit_forest: empty design");

  int n_classes = 0;
  if (params.task == TreeTask::classification) {
    for (int i = 0; i < n; ++i) {
      const double v = y_build(i);
      if (v < 0.0 || v != std::floor(v))
        throw std::invalid_argument("fit_forest: labels must be nonnegative integers");
      n_classes = std::max(n_classes, static_cast<int>(v) + 1);
    }
  }

  int max_features = params.max_features;
  if (max_features <= 0)
    max_features = params.task == TreeTask::regression
                       ? d
                       : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(d)))));

  Forest forest;
  forest.n = n;
  forest.d = d;
  forest.params = params;
  forest.params.max_features = max_features;
  forest.trees.reserve(n_T);

  for (int t = 0; t < n_T; ++t) {
    Rng rng = Rng(seed).derive("tree-" + std::to_string(t));
    std::vector<int> rows(n);
    if (params.bootstrap) {
      for (int i = 0; i < n; ++i)
        rows[i] = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
    } else {
      for (int i = 0; i < n; ++i) rows[i] = i;
    }
    detail::TreeBuilder builder{X, y_build, params.task, max_features, n_classes, rng, Tree{}};
    builder.tree.bootstrap_rows = rows;
    builder.build(std::move(rows));
    forest.trees.push_back(std::move(builder.tree));
  }
  return forest;
}

inline Mat rf_smoother(const Forest& forest, const Mat& X, const Mat& X_q) {
  if (static_cast<int>(X.rows()) != forest.n || static_cast<int>(X.cols()) != forest.d)
    throw std::invalid_argument("rf_smoother: design does not match the fitted forest");
  if (X_q.cols() != X.cols()) throw std::invalid_argument("rf_smoother: query dim mismatch");
  const int m = static_cast<int>(X_q.rows());
  const int n_T = static_cast<int>(forest.trees.size());
  Mat S = Mat::Zero(m, forest.n);
  for (const Tree& tree : forest.trees) {
    for (int i = 0; i < m; ++i) {
      const std::vector<int>& members = tree.leaf_members[tree.leaf_of(X_q, i)];
      const double w = 1.0 / (static_cast<double>(n_T) * static_cast<double>(members.size()));
      for (int r : members) S(i, r) += w;
    }
  }
  return S;
}

}  // namespace yfree
