// Grid-search selection: binds smoother families to criteria, y-free or not.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "yfree/criteria.hpp"
#include "yfree/data.hpp"
#include "yfree/forest.hpp"
#include "yfree/linalg.hpp"
#include "yfree/rng.hpp"
#include "yfree/smoothers.hpp"
#include "yfree/spline.hpp"

namespace yfree {

enum class Family { lrr, gf, krr, knn, spline, forest };

struct FamilySpec {
  Family kind = Family::lrr;
  RidgeScaling scaling = RidgeScaling::n_lambda;
  TreeParams tree{};
  // Forest build targets. Required for y-free selection, where the response
  // must never reach the tree builder; defaults to the response otherwise.
  std::optional<Vec> forest_build;

  FamilySpec() = default;
  explicit FamilySpec(Family k, RidgeScaling sc = RidgeScaling::n_lambda)
      : kind(k), scaling(sc) {}
};

struct HyperGrid {
  std::vector<std::string> names;
  std::vector<std::vector<double>> axes;

  static HyperGrid single_axis(std::string name, std::vector<double> values) {
    HyperGrid g;
    g.names.push_back(std::move(name));
    g.axes.push_back(std::move(values));
    return g;
  }

  std::size_t size() const {
    std::size_t total = 1;
    for (const auto& axis : axes) total *= axis.size();
    return total;
  }

  // Mixed-radix decode; axis 0 varies slowest.
  std::vector<double> point(std::size_t flat) const {
    std::vector<double> out(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      out[a] = axes[a][flat % axes[a].size()];
      flat /= axes[a].size();
    }
    return out;
  }

  void validate() const {
    if (names.size() != axes.size() || axes.empty())
      throw std::invalid_argument("hypergrid: axis/name mismatch");
    for (const auto& axis : axes) {
      if (axis.empty()) throw std::invalid_argument("hypergrid: empty axis");
      for (std::size_t i = 0; i < axis.size(); ++i) {
        if (!std::isfinite(axis[i])) throw std::invalid_argument("hypergrid: non-finite value");
        if (i > 0 && !(axis[i] > axis[i - 1]))
          throw std::invalid_argument("hypergrid: values must be strictly ascending");
      }
    }
  }

  int axis_index(const std::string& name) const {
    for (std::size_t a = 0; a < names.size(); ++a)
      if (names[a] == name) return static_cast<int>(a);
    return -1;
  }
};

inline std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) throw std::invalid_argument("log_grid: bad range");
  std::vector<double> out(count);
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < count; ++i)
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) / (count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

// 200 log-spaced values in [1e-4, 20] plus an effectively-infinite endpoint.
inline std::vector<double> default_lambda_values() {
  auto v = log_grid(1e-4, 20.0, 200);
  v.push_back(1e6);
  return v;
}

inline std::vector<double> default_sigma_values() { return log_grid(1e-4, 20.0, 200); }

// k from 2 to 30 plus the degenerate global mean k = n.
inline std::vector<double> default_k_values(int n) {
  std::vector<double> v;
  for (int k = 2; k <= 30 && k < n; ++k) v.push_back(k);
  v.push_back(n);
  return v;
}

struct SelectionTraceRow {
  std::vector<double> point;
  double value = std::numeric_limits<double>::quiet_NaN();
};

struct SelectionResult {
  std::vector<std::string> names;
  std::vector<double> chosen;
  double value = std::numeric_limits<double>::quiet_NaN();
  std::vector<SelectionTraceRow> trace;
  std::vector<std::size_t> tied;  // flat indices sharing the exact minimum

  double at(const std::string& name) const {
    for (std::size_t a = 0; a < names.size(); ++a)
      if (names[a] == name) return chosen[a];
    throw std::invalid_argument("selection result: no axis named " + name);
  }
};

namespace detail {

// Ties prefer the more regularized candidate: larger lambda/sigma/k/trees,
// smaller t/epochs.
inline std::vector<double> regularization_key(const std::vector<std::string>& names,
                                              const std::vector<double>& point) {
  std::vector<double> key(point.size());
  for (std::size_t a = 0; a < point.size(); ++a) {
    const bool smaller_wins = names[a] == "t" || names[a] == "epochs";
    key[a] = smaller_wins ? -point[a] : point[a];
  }
  return key;
}

// Order-independent argmin with the documented tie rule.
inline SelectionResult reduce_trace(const HyperGrid& grid, std::vector<SelectionTraceRow> trace) {
  SelectionResult out;
  out.names = grid.names;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_key;
  std::size_t best_at = 0;
  bool found = false;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const double v = trace[i].value;
    if (std::isnan(v)) continue;
    if (!found || v < best) {
      best = v;
      best_at = i;
      best_key = regularization_key(grid.names, trace[i].point);
      out.tied.assign(1, i);
      found = true;
    } else if (v == best) {
      out.tied.push_back(i);
      auto key = regularization_key(grid.names, trace[i].point);
      if (key > best_key) {
        best_key = std::move(key);
        best_at = i;
      }
    }
  }
  if (!found) throw std::runtime_error("grid_select: every grid point was degenerate");
  out.chosen = trace[best_at].point;
  out.value = best;
  out.trace = std::move(trace);
  return out;
}

inline const Vec& require_response(const Dataset& data, const char* who) {
  if (!data.response) throw std::invalid_argument(std::string(who) + ": dataset has no response");
  return *data.response;
}

// Norm of a diagonal (in some orthonormal basis) matrix given its eigenvalues
// plus `extra` copies of `pad`.
inline double spectrum_norm(const Vec& eigs, int extra, double pad, MatrixNorm kind) {
  switch (kind) {
    case MatrixNorm::trace:
      return std::abs(eigs.sum() + extra * pad);
    case MatrixNorm::nuclear:
      return eigs.cwiseAbs().sum() + extra * std::abs(pad);
    case MatrixNorm::frobenius:
      return std::sqrt(eigs.squaredNorm() + extra * pad * pad);
    case MatrixNorm::spectral: {
      double m = eigs.size() ? eigs.cwiseAbs().maxCoeff() : 0.0;
      return extra > 0 ? std::max(m, std::abs(pad)) : m;
    }
  }
  throw std::logic_error("spectrum_norm: unknown norm");
}

// Shared state for the SVD families (lrr, gf): smoother rows are
// R diag(c) U^T on the validation block and U diag(h) U^T on training.
struct SvdEngine {
  Mat U;
  Vec s;
  Mat RV;    // X_v * V
  Mat M;     // RV^T RV
  Mat U2;    // elementwise squares, for hat diagonals
  Vec w;     // U^T y
  Vec y;
  double yy = 0.0;
  int n = 0;

  static SvdEngine make(const Mat& U, const Vec& s, const Mat& V, const Mat& X,
                        const Mat& X_v, const Dataset& data, const CriterionSpec& crit) {
    SvdEngine e;
    e.U = U;
    e.s = s;
    e.n = static_cast<int>(X.rows());
    if (crit.kind == CriterionKind::msv || crit.kind == CriterionKind::msv_tr ||
        crit.kind == CriterionKind::msv_norm) {
      if (X_v.rows() == 0) throw std::invalid_argument("grid_select: criterion needs X_v");
      e.RV = X_v * V;
      e.M = e.RV.transpose() * e.RV;
    }
    if (crit.kind == CriterionKind::loocv) e.U2 = U.cwiseProduct(U);
    if (!criterion_is_yfree(crit.kind)) {
      e.y = require_response(data, "grid_select");
      e.w = U.transpose() * e.y;
      e.yy = e.y.squaredNorm();
    }
    return e;
  }

  // c = prediction filter, h = s .* c = training shrinkage factors.
  double evaluate(const CriterionSpec& crit, const Vec& c, double n_v) const {
    const int r = static_cast<int>(s.size());
    Vec h = s.cwiseProduct(c);
    switch (crit.kind) {
      case CriterionKind::msv: {
        double pred2 = (RV * c.cwiseProduct(w)).squaredNorm();
        return std::abs(crit.a * yy / n - pred2 / n_v);
      }
      case CriterionKind::msv_tr: {
        double tr = 0.0;
        for (int i = 0; i < r; ++i) tr += c(i) * c(i) * M(i, i);
        return std::abs(1.0 - tr / n_v);
      }
      case CriterionKind::msv_norm: {
        // A = a I/n - U B U^T / n_v with B = diag(c) M diag(c).
        Mat B = c.asDiagonal() * M * c.asDiagonal();
        if (crit.norm == MatrixNorm::frobenius) {
          double fro2 = crit.a * crit.a / n - 2.0 * crit.a * B.trace() / (n * n_v) +
                        B.squaredNorm() / (n_v * n_v);
          return std::sqrt(std::max(0.0, fro2));
        }
        if (crit.norm == MatrixNorm::trace) return std::abs(crit.a - B.trace() / n_v);
        Vec beta = sym_eig(B).values;
        Vec eigs = (crit.a / n - beta.array() / n_v).matrix();
        return spectrum_norm(eigs, n - r, crit.a / n, crit.norm);
      }
      case CriterionKind::msv_expected:
        return std::abs(1.0 - c.squaredNorm());
      case CriterionKind::gcv: {
        double den = n - h.sum();
        if (std::abs(den) < 1e-12 * n) return std::numeric_limits<double>::quiet_NaN();
        double rss = yy - 2.0 * h.cwiseProduct(w).dot(w) + h.cwiseProduct(h).cwiseProduct(w).dot(w);
        return n * rss / (den * den);
      }
      case CriterionKind::gcv_yfree: {
        double den = n - h.sum();
        if (std::abs(den) < 1e-12 * n) return std::numeric_limits<double>::quiet_NaN();
        Vec eigs = (1.0 - h.array()).square().matrix();
        return spectrum_norm(eigs, n - r, 1.0, crit.norm) / (den * den);
      }
      case CriterionKind::loocv: {
        Vec fhat = U * h.cwiseProduct(w);
        Vec diag = U2 * h;
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
          double dj = 1.0 - diag(j);
          if (std::abs(dj) < 1e-12) return std::numeric_limits<double>::quiet_NaN();
          double rj = (y(j) - fhat(j)) / dj;
          acc += rj * rj;
        }
        return acc / n;
      }
      case CriterionKind::in_sample_msv_yfree: {
        Vec eigs = crit.in_sample == InSampleMode::StS
                       ? Vec((crit.a / n - h.array().square() / n).matrix())
                       : Vec((crit.a / n - h.array() / n).matrix());
        return spectrum_norm(eigs, n - r, crit.a / n, crit.norm);
      }
      default:
        throw std::invalid_argument("grid_select: criterion not valid here");
    }
  }
};

// Per-sigma cache for kernel ridge; Q is square orthogonal, so norms of
// a I/n - Q B Q^T / n_v reduce to the rotated matrix a I/n - B / n_v.
struct KrrSigmaCache {
  KernelFactor F;
  Mat G;   // P^T P with P = K(X_v, X) Q
  Mat P;
  Mat Q2;
  Vec w;
};

// Evaluate one criterion from materialized smoother blocks.
inline double evaluate_materialized(const CriterionSpec& crit, const Dataset& data,
                                    const Mat* S_v, const Mat* S_tr) {
  try {
    switch (crit.kind) {
      case CriterionKind::msv:
        return msv(require_response(data, "grid_select"), *S_v, crit.a).value;
      case CriterionKind::msv_tr:
        return msv_tr(*S_v).value;
      case CriterionKind::msv_norm:
        return msv_norm(*S_v, crit.norm, crit.a).value;
      case CriterionKind::gcv:
        return gcv(require_response(data, "grid_select"), *S_tr).value;
      case CriterionKind::gcv_yfree:
        return gcv_yfree(*S_tr, crit.norm).value;
      case CriterionKind::loocv:
        return loocv(require_response(data, "grid_select"), *S_tr).value;
      case CriterionKind::in_sample_msv_yfree:
        return in_sample_msv_yfree(*S_tr, crit.in_sample, crit.norm, crit.a).value;
      default:
        throw std::invalid_argument("grid_select: criterion not valid for this family");
    }
  } catch (const std::domain_error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

inline bool needs_validation_block(CriterionKind kind) {
  return kind == CriterionKind::msv || kind == CriterionKind::msv_tr ||
         kind == CriterionKind::msv_norm;
}

inline Mat take_rows(const Mat& X, const std::vector<int>& idx) {
  Mat out(static_cast<int>(idx.size()), X.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<int>(i)) = X.row(idx[i]);
  return out;
}

inline Vec take(const Vec& y, const std::vector<int>& idx) {
  Vec out(static_cast<int>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<int>(i)) = y(idx[i]);
  return out;
}

}  // namespace detail

// Evaluates the criterion at every grid point and returns the argmin with the
// full trace. Degenerate points (undefined criterion) score NaN and are
// skipped; y-free criteria never read data.response.
inline SelectionResult grid_select(const FamilySpec& family, const HyperGrid& grid,
                                   const CriterionSpec& crit, const Dataset& data,
                                   const Mat& X_v, std::uint64_t seed) {
  grid.validate();
  if (crit.kind == CriterionKind::kfold_cv)
    throw std::invalid_argument("grid_select: use kfold_cv_select for k-fold CV");
  const int n = data.n();
  const double n_v = static_cast<double>(X_v.rows());
  if (detail::needs_validation_block(crit.kind)) {
    if (X_v.rows() == 0) throw std::invalid_argument("grid_select: criterion needs X_v");
    if (family.kind != Family::spline && X_v.cols() != data.X.cols())
      throw std::invalid_argument("grid_select: X_v column mismatch");
  }

  std::vector<SelectionTraceRow> trace(grid.size());
  for (std::size_t i = 0; i < trace.size(); ++i) trace[i].point = grid.point(i);

  auto require_axes = [&](std::initializer_list<const char*> names) {
    if (grid.names.size() != names.size())
      throw std::invalid_argument("grid_select: wrong axis count for family");
    for (const char* name : names)
      if (grid.axis_index(name) < 0)
        throw std::invalid_argument(std::string("grid_select: missing axis ") + name);
  };

  switch (family.kind) {
    case Family::lrr: {
      require_axes({"lambda"});
      auto F = LrrFactor::fit(data.X);
      auto eng = detail::SvdEngine::make(F.U, F.s, F.V, data.X, X_v, data, crit);
      for (auto& row : trace)
        row.value = eng.evaluate(crit, F.filter(F.lambda_eff(row.point[0], family.scaling)), n_v);
      break;
    }
    case Family::gf: {
      require_axes({"t"});
      auto F = GfFactor::fit(data.X);
      auto eng = detail::SvdEngine::make(F.U, F.s, F.V, data.X, X_v, data, crit);
      for (auto& row : trace) row.value = eng.evaluate(crit, F.filter(row.point[0]), n_v);
      break;
    }
    case Family::krr: {
      require_axes({"lambda", "sigma"});
      const int il = grid.axis_index("lambda"), is = grid.axis_index("sigma");
      if (crit.kind == CriterionKind::msv_expected)
        throw std::invalid_argument("grid_select: kernel family has no expected-outer form");
      std::map<double, detail::KrrSigmaCache> cache;
      for (auto& row : trace) {
        const double lambda = row.point[il], sigma = row.point[is];
        if (lambda < 0.0 || sigma <= 0.0)
          throw std::invalid_argument("grid_select: bad kernel point");
        auto it = cache.find(sigma);
        if (it == cache.end()) {
          detail::KrrSigmaCache c;
          c.F = KernelFactor::fit(data.X, sigma);
          if (detail::needs_validation_block(crit.kind)) {
            c.P = c.F.cross_kernel(X_v) * c.F.Q;
            c.G = c.P.transpose() * c.P;
          }
          if (crit.kind == CriterionKind::loocv) c.Q2 = c.F.Q.cwiseProduct(c.F.Q);
          if (!criterion_is_yfree(crit.kind))
            c.w = c.F.Q.transpose() * detail::require_response(data, "grid_select");
          it = cache.emplace(sigma, std::move(c)).first;
        }
        const auto& c = it->second;
        Vec wt = c.F.weights(lambda);
        Vec h = c.F.e.cwiseProduct(wt);
        switch (crit.kind) {
          case CriterionKind::msv: {
            const Vec& y = *data.response;
            double pred2 = (c.P * wt.cwiseProduct(c.w)).squaredNorm();
            row.value = std::abs(crit.a * y.squaredNorm() / n - pred2 / n_v);
            break;
          }
          case CriterionKind::msv_tr: {
            double tr = 0.0;
            for (int i = 0; i < n; ++i) tr += wt(i) * wt(i) * c.G(i, i);
            row.value = std::abs(1.0 - tr / n_v);
            break;
          }
          case CriterionKind::msv_norm: {
            Mat A = -(wt.asDiagonal() * c.G * wt.asDiagonal()) / n_v;
            A.diagonal().array() += crit.a / n;
            row.value = matrix_norm(A, crit.norm);
            break;
          }
          case CriterionKind::gcv:
          case CriterionKind::gcv_yfree:
          case CriterionKind::loocv:
          case CriterionKind::in_sample_msv_yfree: {
            detail::SvdEngine eng;
            eng.U = c.F.Q;
            eng.s = Vec::Ones(n);
            eng.n = n;
            eng.U2 = c.Q2;
            eng.w = c.w;
            if (!criterion_is_yfree(crit.kind)) {
              eng.y = *data.response;
              eng.yy = eng.y.squaredNorm();
            }
            row.value = eng.evaluate(crit, h, n_v);
            break;
          }
          default:
            throw std::invalid_argument("grid_select: criterion not valid for krr");
        }
        if (std::isinf(row.value)) row.value = std::numeric_limits<double>::quiet_NaN();
      }
      break;
    }
    case Family::knn: {
      require_axes({"k"});
      for (auto& row : trace) {
        const double kd = row.point[0];
        const int k = static_cast<int>(kd);
        if (kd != k || k < 1 || k > n) {
          row.value = std::numeric_limits<double>::quiet_NaN();
          continue;
        }
        Mat S_v, S_tr;
        const Mat* pv = nullptr;
        const Mat* pt = nullptr;
        if (detail::needs_validation_block(crit.kind)) {
          S_v = knn_smoother(data.X, X_v, k);
          pv = &S_v;
        } else {
          S_tr = knn_smoother(data.X, data.X, k);
          pt = &S_tr;
        }
        row.value = detail::evaluate_materialized(crit, data, pv, pt);
      }
      break;
    }
    case Family::spline: {
      require_axes({"lambda"});
      if (data.d() != 1 || (X_v.rows() > 0 && X_v.cols() != 1))
        throw std::invalid_argument("grid_select: spline needs 1-d covariates");
      auto F = SplineFactor::fit(data.X.col(0));
      for (auto& row : trace) {
        Mat S_v, S_tr;
        const Mat* pv = nullptr;
        const Mat* pt = nullptr;
        if (detail::needs_validation_block(crit.kind)) {
          S_v = F.smoother_rows(X_v.col(0), row.point[0]);
          pv = &S_v;
        } else {
          S_tr = F.smoother_train(row.point[0]);
          pt = &S_tr;
        }
        row.value = detail::evaluate_materialized(crit, data, pv, pt);
      }
      break;
    }
    case Family::forest: {
      require_axes({"trees"});
      const Vec& build = family.forest_build
                             ? *family.forest_build
                             : (criterion_is_yfree(crit.kind)
                                    ? throw std::invalid_argument(
                                          "grid_select: y-free forest selection needs explicit "
                                          "build targets")
                                    : detail::require_response(data, "grid_select"));
      for (auto& row : trace) {
        const double td = row.point[0];
        const int n_trees = static_cast<int>(td);
        if (td != n_trees || n_trees < 1) {
          row.value = std::numeric_limits<double>::quiet_NaN();
          continue;
        }
        // One seed for the whole grid: forests along the axis share trees.
        auto forest = fit_forest(data.X, build, n_trees, seed, family.tree);
        Mat S_v, S_tr;
        const Mat* pv = nullptr;
        const Mat* pt = nullptr;
        if (detail::needs_validation_block(crit.kind)) {
          S_v = rf_smoother(forest, data.X, X_v);
          pv = &S_v;
        } else {
          S_tr = rf_smoother(forest, data.X, data.X);
          pt = &S_tr;
        }
        row.value = detail::evaluate_materialized(crit, data, pv, pt);
      }
      break;
    }
  }
  return detail::reduce_trace(grid, std::move(trace));
}

// Mean validation squared error (regression) or misclassification rate
// (classification) per grid point; fold assignment is seeded and balanced.
inline SelectionResult kfold_cv_select(const FamilySpec& family, const HyperGrid& grid, int folds,
                                       const Dataset& data, std::uint64_t seed) {
  grid.validate();
  const int n = data.n();
  if (folds < 2) throw std::invalid_argument("kfold_cv_select: need folds >= 2");
  if (n < folds) throw std::invalid_argument("kfold_cv_select: more folds than rows");
  const bool classify = data.labels.has_value();
  if (!classify) detail::require_response(data, "kfold_cv_select");
  if (classify && data.n_classes < 2)
    throw std::invalid_argument("kfold_cv_select: labels need n_classes");

  auto perm = Rng(seed).derive("kfold-assign").permutation(static_cast<std::size_t>(n));
  std::vector<std::vector<int>> fold_rows(folds);
  for (int f = 0; f < folds; ++f) {
    const int lo = f * n / folds, hi = (f + 1) * n / folds;
    if (hi <= lo) throw std::invalid_argument("kfold_cv_select: empty fold");
    for (int i = lo; i < hi; ++i) fold_rows[f].push_back(static_cast<int>(perm[i]));
  }

  const std::size_t cells = grid.size();
  std::vector<double> total(cells, 0.0);
  std::vector<char> valid(cells, 1);

  for (int f = 0; f < folds; ++f) {
    std::vector<int> tr_rows;
    for (int g = 0; g < folds; ++g)
      if (g != f) tr_rows.insert(tr_rows.end(), fold_rows[g].begin(), fold_rows[g].end());
    Mat X_tr = detail::take_rows(data.X, tr_rows);
    Mat X_te = detail::take_rows(data.X, fold_rows[f]);
    const int n_tr = static_cast<int>(tr_rows.size());

    Vec y_tr;
    Mat Y_tr;  // compact one-hot when classifying
    std::vector<int> lab_te;
    Vec y_te;
    if (classify) {
      std::vector<int> lab_tr;
      for (int r : tr_rows) lab_tr.push_back((*data.labels)[r]);
      for (int r : fold_rows[f]) lab_te.push_back((*data.labels)[r]);
      Y_tr = one_hot_compact(lab_tr, data.n_classes).Y;
      y_tr = Vec(n_tr);
      for (int i = 0; i < n_tr; ++i) y_tr(i) = lab_tr[i];
    } else {
      y_tr = detail::take(*data.response, tr_rows);
      y_te = detail::take(*data.response, fold_rows[f]);
    }

    auto score = [&](std::size_t cell, const Mat& S_rows) {
      if (classify) {
        auto pred = decode_labels(S_rows * Y_tr, data.n_classes);
        for (std::size_t i = 0; i < pred.size(); ++i)
          if (pred[i] != lab_te[i]) total[cell] += 1.0;
      } else {
        total[cell] += (S_rows * y_tr - y_te).squaredNorm();
      }
    };

    switch (family.kind) {
      case Family::lrr: {
        auto F = LrrFactor::fit(X_tr);
        for (std::size_t i = 0; i < cells; ++i)
          score(i, F.smoother_rows(X_te, F.lambda_eff(grid.point(i)[0], family.scaling)));
        break;
      }
      case Family::gf: {
        auto F = GfFactor::fit(X_tr);
        for (std::size_t i = 0; i < cells; ++i) score(i, F.smoother_rows(X_te, grid.point(i)[0]));
        break;
      }
      case Family::krr: {
        const int il = grid.axis_index("lambda"), is = grid.axis_index("sigma");
        if (il < 0 || is < 0) throw std::invalid_argument("kfold_cv_select: krr axes");
        std::map<double, KernelFactor> cache;
        for (std::size_t i = 0; i < cells; ++i) {
          auto p = grid.point(i);
          auto it = cache.find(p[is]);
          if (it == cache.end()) it = cache.emplace(p[is], KernelFactor::fit(X_tr, p[is])).first;
          score(i, it->second.smoother_rows(X_te, p[il]));
        }
        break;
      }
      case Family::knn: {
        for (std::size_t i = 0; i < cells; ++i) {
          const double kd = grid.point(i)[0];
          const int k = static_cast<int>(kd);
          if (kd != k || k < 1 || k > n_tr) {
            valid[i] = 0;
            continue;
          }
          score(i, knn_smoother(X_tr, X_te, k));
        }
        break;
      }
      case Family::spline: {
        if (data.d() != 1) throw std::invalid_argument("kfold_cv_select: spline needs 1-d data");
        auto F = SplineFactor::fit(X_tr.col(0));
        for (std::size_t i = 0; i < cells; ++i)
          score(i, F.smoother_rows(X_te.col(0), grid.point(i)[0]));
        break;
      }
      case Family::forest: {
        TreeParams params = family.tree;
        if (classify) params.task = TreeTask::classification;
        for (std::size_t i = 0; i < cells; ++i) {
          const double td = grid.point(i)[0];
          const int n_trees = static_cast<int>(td);
          if (td != n_trees || n_trees < 1) {
            valid[i] = 0;
            continue;
          }
          auto forest = fit_forest(X_tr, y_tr, n_trees, seed, params);
          score(i, rf_smoother(forest, X_tr, X_te));
        }
        break;
      }
    }
  }

  std::vector<SelectionTraceRow> trace(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    trace[i].point = grid.point(i);
    if (valid[i]) trace[i].value = total[i] / n;
  }
  return detail::reduce_trace(grid, std::move(trace));
}

inline SelectionResult knn_k_select(const CriterionSpec& crit, const Dataset& data, const Mat& X_v,
                                    const std::vector<double>& k_values, std::uint64_t seed) {
  return grid_select(FamilySpec(Family::knn),
                     HyperGrid::single_axis("k", k_values), crit, data, X_v, seed);
}

}  // namespace yfree
