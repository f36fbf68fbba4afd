// Linear-smoother families: ridge, kernel ridge, gradient flow, kNN.
// Every model here exposes its prediction as f_hat = S_rows * y.
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "yfree/linalg.hpp"

namespace yfree {

enum class RidgeScaling { n_lambda, lambda };

inline Mat gaussian_kernel(const Mat& A, const Mat& B, double sigma) {
  if (A.cols() != B.cols()) throw std::invalid_argument("gaussian_kernel: dim mismatch");
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_kernel: sigma must be positive");
  Mat K(A.rows(), B.rows());
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < B.rows(); ++j)
      K(i, j) = std::exp(-(A.row(i) - B.row(j)).squaredNorm() * inv);
  return K;
}

// Linear ridge regression through a thin SVD of X; one factorization serves
// the whole lambda grid. lambda = 0 falls back to the min-norm solution.
struct LrrFactor {
  Mat U;  // n x r
  Vec s;  // descending
  Mat V;  // d x r
  int n = 0, d = 0;

  static LrrFactor fit(const Mat& X) {
    LrrFactor f;
    auto svd = thin_svd(X);
    f.U = std::move(svd.U);
    f.s = std::move(svd.s);
    f.V = std::move(svd.V);
    f.n = static_cast<int>(X.rows());
    f.d = static_cast<int>(X.cols());
    return f;
  }

  double lambda_eff(double lambda, RidgeScaling sc) const {
    return sc == RidgeScaling::n_lambda ? static_cast<double>(n) * lambda : lambda;
  }

  // s_i / (s_i^2 + lam); pseudo-inverse cutoff when lam == 0.
  Vec filter(double lam_eff) const {
    Vec f(s.size());
    if (lam_eff == 0.0) {
      double cut = s.size() ? 1e-12 * s(0) : 0.0;
      for (int i = 0; i < s.size(); ++i) f(i) = s(i) > cut ? 1.0 / s(i) : 0.0;
    } else {
      for (int i = 0; i < s.size(); ++i) f(i) = s(i) / (s(i) * s(i) + lam_eff);
    }
    return f;
  }

  Vec coefficients(const Vec& y, double lam_eff) const {
    return V * (filter(lam_eff).asDiagonal() * (U.transpose() * y));
  }

  Mat smoother_rows(const Mat& Xq, double lam_eff) const {
    return (Xq * V) * filter(lam_eff).asDiagonal() * U.transpose();
  }

  // E(s* s*^T) under E(phi phi^T) = I: U diag(s^2/(s^2+lam)^2) U^T.
  Mat expected_outer(double lam_eff) const {
    Vec f = filter(lam_eff);
    Vec diag(f.size());
    for (int i = 0; i < f.size(); ++i) diag(i) = f(i) * f(i);
    return U * diag.asDiagonal() * U.transpose();
  }
};

// Kernel ridge regression via one symmetric eigendecomposition of K.
struct KernelFactor {
  Mat X_train;
  double sigma = 1.0;
  Vec e;  // eigenvalues of K, ascending, clamped at 0
  Mat Q;

  static KernelFactor fit(const Mat& X, double sigma) {
    KernelFactor f;
    f.X_train = X;
    f.sigma = sigma;
    auto eig = sym_eig(gaussian_kernel(X, X, sigma));
    f.e = eig.values.cwiseMax(0.0);
    f.Q = std::move(eig.vectors);
    return f;
  }

  Vec weights(double lambda) const {
    Vec w(e.size());
    if (lambda == 0.0) {
      double cut = 1e-12 * e.maxCoeff();
      for (int i = 0; i < e.size(); ++i) w(i) = e(i) > cut ? 1.0 / e(i) : 0.0;
    } else {
      for (int i = 0; i < e.size(); ++i) w(i) = 1.0 / (e(i) + lambda);
    }
    return w;
  }

  Mat cross_kernel(const Mat& Xq) const { return gaussian_kernel(Xq, X_train, sigma); }

  Mat smoother_rows(const Mat& Xq, double lambda) const {
    return (cross_kernel(Xq) * Q) * weights(lambda).asDiagonal() * Q.transpose();
  }

  Mat smoother_train(double lambda) const {
    Vec h(e.size());
    Vec w = weights(lambda);
    for (int i = 0; i < e.size(); ++i) h(i) = e(i) * w(i);
    return Q * h.asDiagonal() * Q.transpose();
  }
};

// Gradient flow on the least-squares objective, beta(0) = 0; exact solution
// via the SVD. Time t plays the role of inverse regularization.
struct GfFactor {
  Mat U;
  Vec s;
  Mat V;
  int n = 0, d = 0;

  static GfFactor fit(const Mat& X) {
    GfFactor f;
    auto svd = thin_svd(X);
    f.U = std::move(svd.U);
    f.s = std::move(svd.s);
    f.V = std::move(svd.V);
    f.n = static_cast<int>(X.rows());
    f.d = static_cast<int>(X.cols());
    return f;
  }

  // (1 - exp(-t s_i^2)) / s_i, 0 on the null space.
  Vec filter(double t) const {
    Vec f(s.size());
    double cut = s.size() ? 1e-12 * s(0) : 0.0;
    for (int i = 0; i < s.size(); ++i)
      f(i) = s(i) > cut ? -std::expm1(-t * s(i) * s(i)) / s(i) : 0.0;
    return f;
  }

  Vec coefficients(const Vec& y, double t) const {
    return V * (filter(t).asDiagonal() * (U.transpose() * y));
  }

  Mat smoother_rows(const Mat& Xq, double t) const {
    return (Xq * V) * filter(t).asDiagonal() * U.transpose();
  }

  Mat expected_outer(double t) const {
    Vec f = filter(t);
    Vec diag(f.size());
    for (int i = 0; i < f.size(); ++i) diag(i) = f(i) * f(i);
    return U * diag.asDiagonal() * U.transpose();
  }
};

// Explicit kNN weight matrix: 1/k on the k nearest training rows, distance
// ties broken toward the lower training index.
inline Mat knn_smoother(const Mat& X_train, const Mat& Xq, int k) {
  const int n = static_cast<int>(X_train.rows());
  if (k < 1 || k > n) throw std::invalid_argument("knn_smoother: k out of range");
  Mat S = Mat::Zero(Xq.rows(), n);
  std::vector<std::pair<double, int>> dist(n);
  for (int i = 0; i < Xq.rows(); ++i) {
    for (int j = 0; j < n; ++j)
      dist[j] = {(Xq.row(i) - X_train.row(j)).squaredNorm(), j};
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    for (int j = 0; j < k; ++j) S(i, dist[j].second) = 1.0 / k;
  }
  return S;
}

}  // namespace yfree
