#include <doctest.h>

#include <cmath>
#include <vector>

#include "yfree/data.hpp"
#include "yfree/forest.hpp"
#include "yfree/rng.hpp"

using yfree::Forest;
using yfree::Mat;
using yfree::Rng;
using yfree::TreeParams;
using yfree::TreeTask;
using yfree::Vec;

namespace {

bool same_structure(const Forest& a, const Forest& b) {
  if (a.trees.size() != b.trees.size()) return false;
  for (std::size_t t = 0; t < a.trees.size(); ++t) {
    const auto& ta = a.trees[t];
    const auto& tb = b.trees[t];
    if (ta.bootstrap_rows != tb.bootstrap_rows) return false;
    if (ta.leaf_members != tb.leaf_members) return false;
    if (ta.nodes.size() != tb.nodes.size()) return false;
    for (std::size_t i = 0; i < ta.nodes.size(); ++i) {
      if (ta.nodes[i].feature != tb.nodes[i].feature) return false;
      if (ta.nodes[i].threshold != tb.nodes[i].threshold) return false;
      if (ta.nodes[i].left != tb.nodes[i].left) return false;
      if (ta.nodes[i].right != tb.nodes[i].right) return false;
      if (ta.nodes[i].leaf != tb.nodes[i].leaf) return false;
    }
  }
  return true;
}

int leaf_count(const yfree::Tree& tree) { return static_cast<int>(tree.leaf_members.size()); }

}  // namespace

TEST_CASE("forest: constant response collapses every tree to a single leaf") {
  Rng rng(50);
  Mat X(12, 3);
  for (int i = 0; i < X.size(); ++i) X(i / 3, i % 3) = rng.normal();
  Vec y = Vec::Constant(12, 4.2);
  Forest forest = yfree::fit_forest(X, y, 5, 7);
  for (const auto& tree : forest.trees) {
    CHECK(tree.nodes.size() == 1);
    CHECK(leaf_count(tree) == 1);
    CHECK(tree.leaf_members[0].size() == 12);
  }
  Mat S = yfree::rf_smoother(forest, X, X);
  CHECK((S * y - y).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("forest: two distinct points with distinct responses split into two leaves") {
  Mat X(2, 1);
  X << 0.0, 1.0;
  Vec y(2);
  y << -1.0, 1.0;
  TreeParams params;
  params.bootstrap = false;
  Forest forest = yfree::fit_forest(X, y, 3, 11, params);
  for (const auto& tree : forest.trees) {
    CHECK(tree.nodes.size() == 3);
    CHECK(leaf_count(tree) == 2);
  }
  Mat S = yfree::rf_smoother(forest, X, X);
  CHECK((S - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forest: deterministic per seed") {
  Rng rng(51);
  Mat X(25, 4);
  Vec y(25);
  for (int i = 0; i < 25; ++i) {
    for (int j = 0; j < 4; ++j) X(i, j) = rng.normal();
    y(i) = rng.normal();
  }
  Forest a = yfree::fit_forest(X, y, 4, 99);
  Forest b = yfree::fit_forest(X, y, 4, 99);
  Forest c = yfree::fit_forest(X, y, 4, 100);
  CHECK(same_structure(a, b));
  CHECK(!same_structure(a, c));
}

TEST_CASE("forest: smoother rows are distributions over training rows") {
  Rng rng(52);
  Mat X(30, 2), Xq(9, 2);
  Vec y(30);
  for (int i = 0; i < 30; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = rng.normal();
    y(i) = rng.normal();
  }
  for (int i = 0; i < 9; ++i) {
    Xq(i, 0) = rng.normal();
    Xq(i, 1) = rng.normal();
  }
  for (TreeTask task : {TreeTask::regression, TreeTask::classification}) {
    TreeParams params;
    params.task = task;
    Vec yb = y;
    if (task == TreeTask::classification)
      for (int i = 0; i < 30; ++i) yb(i) = y(i) > 0 ? 1.0 : 0.0;
    Forest forest = yfree::fit_forest(X, yb, 7, 3, params);
    Mat S = yfree::rf_smoother(forest, X, Xq);
    CHECK(S.minCoeff() >= 0.0);
    for (int i = 0; i < S.rows(); ++i)
      CHECK(S.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("forest: smoother equals per-tree leaf means averaged over trees") {
  Rng rng(53);
  const int n = 40, m = 12;
  Mat X(n, 3), Xq(m, 3);
  Vec y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) X(i, j) = rng.uniform(0.0, 1.0);
    y(i) = rng.normal();
  }
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < 3; ++j) Xq(i, j) = rng.uniform(0.0, 1.0);
  Forest forest = yfree::fit_forest(X, y, 15, 21);
  Vec smoothed = yfree::rf_smoother(forest, X, Xq) * y;
  for (int i = 0; i < m; ++i) {
    double acc = 0.0;
    for (const auto& tree : forest.trees) {
      const auto& members = tree.leaf_members[tree.leaf_of(Xq, i)];
      double mean = 0.0;
      for (int r : members) mean += y(r);
      acc += mean / static_cast<double>(members.size());
    }
    acc /= static_cast<double>(forest.trees.size());
    CHECK(std::abs(smoothed(i) - acc) < 1e-12);
  }
}

TEST_CASE("forest: single tree, single leaf weights follow the bootstrap multiset") {
  Rng rng(54);
  const int n = 10;
  Mat X(n, 2);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = rng.normal();
  }
  Vec y = Vec::Constant(n, 1.5);
  Forest forest = yfree::fit_forest(X, y, 1, 8);
  Mat q(1, 2);
  q << 0.0, 0.0;
  Mat S = yfree::rf_smoother(forest, X, q);
  std::vector<int> counts(n, 0);
  for (int r : forest.trees[0].bootstrap_rows) ++counts[r];
  for (int r = 0; r < n; ++r)
    CHECK(S(0, r) == doctest::Approx(counts[r] / static_cast<double>(n)).epsilon(1e-14));
}

TEST_CASE("forest: root split matches a brute-force variance-reduction oracle") {
  Rng rng(55);
  TreeParams params;
  params.bootstrap = false;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 8;
    Mat X(n, 2);
    Vec y(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = rng.uniform(0.0, 1.0);
      X(i, 1) = rng.uniform(0.0, 1.0);
      y(i) = rng.normal();
    }
    Forest forest = yfree::fit_forest(X, y, 1, 1, params);
    const auto& root = forest.trees[0].nodes[0];
    REQUIRE(root.leaf < 0);

    auto sse = [&](const std::vector<int>& rows) {
      double mean = 0.0;
      for (int r : rows) mean += y(r);
      mean /= static_cast<double>(rows.size());
      double out = 0.0;
      for (int r : rows) out += (y(r) - mean) * (y(r) - mean);
      return out;
    };
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    double best_gain = -1.0;
    int best_f = -1;
    double best_thr = 0.0;
    for (int f = 0; f < 2; ++f) {
      std::vector<double> xs(n);
      for (int i = 0; i < n; ++i) xs[i] = X(i, f);
      std::sort(xs.begin(), xs.end());
      for (int k = 1; k < n; ++k) {
        if (xs[k - 1] == xs[k]) continue;
        double thr = 0.5 * (xs[k - 1] + xs[k]);
        std::vector<int> l, r;
        for (int i = 0; i < n; ++i) (X(i, f) <= thr ? l : r).push_back(i);
        double gain = sse(all) - sse(l) - sse(r);
        if (gain > best_gain) {
          best_gain = gain;
          best_f = f;
          best_thr = thr;
        }
      }
    }
    CHECK(root.feature == best_f);
    CHECK(root.threshold == doctest::Approx(best_thr).epsilon(1e-12));
  }
}

TEST_CASE("forest: pure leaves reproduce a piecewise-constant response") {
  Rng rng(56);
  const int n = 24;
  Mat X(n, 2);
  Vec y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = rng.uniform(0.0, 1.0);
    X(i, 1) = rng.uniform(0.0, 1.0);
    y(i) = X(i, 0) > 0.3 ? 2.0 : -1.0;
  }
  TreeParams params;
  params.bootstrap = false;
  Forest forest = yfree::fit_forest(X, y, 1, 5, params);
  Vec fitted = yfree::rf_smoother(forest, X, X) * y;
  CHECK((fitted - y).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("forest: classification argmax of smoothed one-hot equals the tree vote") {
  Mat X(4, 1);
  X << 0.0, 1.0, 2.0, 3.0;
  Vec labels(4);
  labels << 0.0, 0.0, 1.0, 1.0;
  TreeParams params;
  params.task = TreeTask::classification;
  Forest forest = yfree::fit_forest(X, labels, 3, 17, params);

  Mat Y = Mat::Zero(4, 2);
  for (int i = 0; i < 4; ++i) Y(i, static_cast<int>(labels(i))) = 1.0;

  Mat q(5, 1);
  q << -0.5, 0.5, 1.5, 2.5, 3.5;
  Mat smoothed = yfree::rf_smoother(forest, X, q) * Y;
  for (int i = 0; i < q.rows(); ++i) {
    // Pooled argmax; ties go to the lower class index.
    int pooled = smoothed(i, 0) >= smoothed(i, 1) ? 0 : 1;
    // Majority vote: each tree's leaf is pure here, so its vote is the leaf label.
    int votes[2] = {0, 0};
    for (const auto& tree : forest.trees) {
      const auto& members = tree.leaf_members[tree.leaf_of(q, i)];
      double mean = 0.0;
      for (int r : members) mean += labels(r);
      ++votes[mean / static_cast<double>(members.size()) >= 0.5 ? 1 : 0];
    }
    int voted = votes[0] >= votes[1] ? 0 : 1;
    CHECK(pooled == voted);
  }
}

TEST_CASE("forest: gini splitting separates labeled quadrants") {
  Rng rng(57);
  const int n = 40;
  Mat X(n, 2);
  Vec labels(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = rng.uniform(-1.0, 1.0);
    X(i, 1) = rng.uniform(-1.0, 1.0);
    labels(i) = (X(i, 0) > 0.0) == (X(i, 1) > 0.0) ? 1.0 : 0.0;
  }
  TreeParams params;
  params.task = TreeTask::classification;
  params.bootstrap = false;
  params.max_features = 2;
  Forest forest = yfree::fit_forest(X, labels, 1, 2, params);
  Mat Y = Mat::Zero(n, 2);
  for (int i = 0; i < n; ++i) Y(i, static_cast<int>(labels(i))) = 1.0;
  Mat probs = yfree::rf_smoother(forest, X, X) * Y;
  for (int i = 0; i < n; ++i) {
    int predicted = probs(i, 0) >= probs(i, 1) ? 0 : 1;
    CHECK(predicted == static_cast<int>(labels(i)));
  }
}

TEST_CASE("forest: classification defaults to sqrt(d) features per node") {
  Rng rng(58);
  Mat X(30, 5);
  Vec labels(30);
  for (int i = 0; i < 30; ++i) {
    for (int j = 0; j < 5; ++j) X(i, j) = rng.normal();
    labels(i) = X(i, 2) > 0 ? 1.0 : 0.0;
  }
  TreeParams params;
  params.task = TreeTask::classification;
  Forest forest = yfree::fit_forest(X, labels, 3, 13, params);
  CHECK(forest.params.max_features == 2);
  Forest again = yfree::fit_forest(X, labels, 3, 13, params);
  CHECK(same_structure(forest, again));
}

TEST_CASE("forest: argument validation") {
  Mat X(3, 1);
  X << 0.0, 1.0, 2.0;
  Vec y(3);
  y << 0.0, 1.0, 2.0;
  CHECK_THROWS_AS(yfree::fit_forest(X, y, 0, 1), std::invalid_argument);
  Vec bad(2);
  bad << 0.0, 1.0;
  CHECK_THROWS_AS(yfree::fit_forest(X, bad, 1, 1), std::invalid_argument);
  TreeParams params;
  params.task = TreeTask::classification;
  Vec frac(3);
  frac << 0.0, 1.5, 1.0;
  CHECK_THROWS_AS(yfree::fit_forest(X, frac, 1, 1, params), std::invalid_argument);
  Forest forest = yfree::fit_forest(X, y, 1, 1);
  Mat wrong(4, 1);
  wrong.setZero();
  CHECK_THROWS_AS(yfree::rf_smoother(forest, wrong, X), std::invalid_argument);
  Mat wider(3, 2);
  wider.setZero();
  CHECK_THROWS_AS(yfree::rf_smoother(forest, X, wider), std::invalid_argument);
}
