// Extended-precision kernel interpolation path. Flat Gaussian kernels at
// lambda = 0 reach condition numbers past 1e20, beyond double; the complexity
// demo therefore runs its smoother algebra in __float128.
#pragma once

#include <vector>

#include "yfree/linalg.hpp"

namespace yfree {

#if defined(YFREE_HAVE_QUADMATH)
using exact_t = quad;
inline exact_t exact_abs(exact_t x) { return q_abs(x); }
inline exact_t exact_sqrt(exact_t x) { return q_sqrt(x); }
inline exact_t exact_exp(exact_t x) { return q_exp(x); }
#else
using exact_t = long double;
inline exact_t exact_abs(exact_t x) { return fabsl(x); }
inline exact_t exact_sqrt(exact_t x) { return sqrtl(x); }
inline exact_t exact_exp(exact_t x) { return expl(x); }
#endif

struct ExactKrrReport {
  double in_sample_max_residual = 0.0;
  double msv_tr = 0.0;   // |1 - Tr(S_v^T S_v)/n_v|
  double edof = 0.0;     // Tr(S)
  double min_eig = 0.0;
  double max_eig = 0.0;
  Vec predictions;       // S_v y, rounded to double on the way out
};

namespace detail {

inline std::vector<std::vector<exact_t>> exact_gaussian_kernel(const Mat& A, const Mat& B,
                                                               double sigma) {
  const exact_t inv = exact_t(1) / (exact_t(2) * exact_t(sigma) * exact_t(sigma));
  std::vector<std::vector<exact_t>> K(A.rows(), std::vector<exact_t>(B.rows()));
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < B.rows(); ++j) {
      exact_t d2(0);
      for (int k = 0; k < A.cols(); ++k) {
        exact_t diff = exact_t(A(i, k)) - exact_t(B(j, k));
        d2 += diff * diff;
      }
      K[i][j] = exact_exp(-d2 * inv);
    }
  return K;
}

}  // namespace detail

// Kernel ridge smoother in extended precision; lambda = 0 gives the
// interpolant whenever the kernel matrix is numerically invertible at
// extended epsilon.
inline ExactKrrReport exact_krr_report(const Mat& X, const Vec& y, double sigma,
                                       double lambda, const Mat& X_v) {
  const int n = static_cast<int>(X.rows());
  const int n_v = static_cast<int>(X_v.rows());

  auto K = detail::exact_gaussian_kernel(X, X, sigma);
  auto eig = jacobi_sym_eig<exact_t>(K, [](exact_t v) { return exact_abs(v); },
                                     [](exact_t v) { return exact_sqrt(v); });

  exact_t emax(0);
  for (int i = 0; i < n; ++i)
    if (eig.values[i] > emax) emax = eig.values[i];
  std::vector<exact_t> w(n);
  // roughly 50x extended epsilon: eigenvalues below this carry no digits
  const exact_t cut = emax * exact_t(1e-32);
  for (int i = 0; i < n; ++i) {
    exact_t denom = eig.values[i] + exact_t(lambda);
    w[i] = (lambda == 0.0 ? (eig.values[i] > cut ? exact_t(1) / eig.values[i] : exact_t(0))
                          : exact_t(1) / denom);
  }

  // fitted = Q diag(e w) Q^T y
  std::vector<exact_t> qty(n, exact_t(0));
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i) qty[k] += eig.vectors[k][i] * exact_t(y(i));
  ExactKrrReport rep;
  exact_t max_resid(0), edof(0);
  for (int k = 0; k < n; ++k) edof += eig.values[k] * w[k];
  for (int i = 0; i < n; ++i) {
    exact_t fit(0);
    for (int k = 0; k < n; ++k)
      fit += eig.vectors[k][i] * eig.values[k] * w[k] * qty[k];
    exact_t r = exact_abs(exact_t(y(i)) - fit);
    if (r > max_resid) max_resid = r;
  }

  // S_v = K_v Q diag(w) Q^T; Tr(S_v^T S_v) = sum of squared entries
  auto Kv = detail::exact_gaussian_kernel(X_v, X, sigma);
  exact_t fro2(0);
  rep.predictions = Vec(n_v);
  for (int i = 0; i < n_v; ++i) {
    std::vector<exact_t> pk(n, exact_t(0));
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j) pk[k] += Kv[i][j] * eig.vectors[k][j];
    exact_t pred(0);
    for (int j = 0; j < n; ++j) {
      exact_t sij(0);
      for (int k = 0; k < n; ++k) sij += pk[k] * w[k] * eig.vectors[k][j];
      fro2 += sij * sij;
      pred += sij * exact_t(y(j));
    }
    rep.predictions(i) = static_cast<double>(pred);
  }

  exact_t crit = exact_t(1) - fro2 / exact_t(n_v);
  rep.in_sample_max_residual = static_cast<double>(max_resid);
  rep.msv_tr = static_cast<double>(exact_abs(crit));
  rep.edof = static_cast<double>(edof);
  rep.min_eig = static_cast<double>(eig.values[0]);
  rep.max_eig = static_cast<double>(emax);
  return rep;
}

}  // namespace yfree
