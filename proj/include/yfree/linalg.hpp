// Dense linear-algebra helpers: norms, factorizations, extended-precision Jacobi.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#if defined(YFREE_HAVE_QUADMATH)
#include <quadmath.h>
#endif

#include "yfree/rng.hpp"

namespace yfree {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class MatrixNorm { trace, nuclear, frobenius, spectral };

inline std::string norm_name(MatrixNorm n) {
  switch (n) {
    case MatrixNorm::trace: return "trace";
    case MatrixNorm::nuclear: return "nuclear";
    case MatrixNorm::frobenius: return "frobenius";
    case MatrixNorm::spectral: return "spectral";
  }
  return "?";
}

// Trace is a seminorm: |Tr(A)| can vanish on nonzero A.
inline double matrix_norm(const Mat& A, MatrixNorm kind) {
  switch (kind) {
    case MatrixNorm::trace:
      return std::abs(A.trace());
    case MatrixNorm::frobenius:
      return A.norm();
    case MatrixNorm::nuclear:
    case MatrixNorm::spectral: {
      Eigen::JacobiSVD<Mat> svd(A);
      const Vec& s = svd.singularValues();
      return kind == MatrixNorm::nuclear ? s.sum() : (s.size() ? s(0) : 0.0);
    }
  }
  throw std::logic_error("matrix_norm: bad kind");
}

// Norms of a symmetric matrix given its eigenvalues (singular values = |eigs|).
inline double matrix_norm_sym(const Vec& eigs, MatrixNorm kind) {
  switch (kind) {
    case MatrixNorm::trace: return std::abs(eigs.sum());
    case MatrixNorm::nuclear: return eigs.cwiseAbs().sum();
    case MatrixNorm::frobenius: return eigs.norm();
    case MatrixNorm::spectral: return eigs.size() ? eigs.cwiseAbs().maxCoeff() : 0.0;
  }
  throw std::logic_error("matrix_norm_sym: bad kind");
}

struct SymEig {
  Vec values;  // ascending
  Mat vectors;
};

inline SymEig sym_eig(const Mat& A) {
  Eigen::SelfAdjointEigenSolver<Mat> es(A);
  if (es.info() != Eigen::Success) throw std::runtime_error("sym_eig failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

struct ThinSvd {
  Mat U;  // n x r
  Vec s;  // descending
  Mat V;  // d x r
};

inline ThinSvd thin_svd(const Mat& A) {
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

// Haar-ish random orthogonal matrix from QR of a Gaussian draw.
inline Mat random_orthogonal(int m, Rng& rng) {
  Mat G(m, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) G(i, j) = rng.normal();
  Eigen::HouseholderQR<Mat> qr(G);
  Mat Q = qr.householderQ();
  Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < m; ++j)
    if (R(j, j) < 0) Q.col(j) = -Q.col(j);
  return Q;
}

#if defined(YFREE_HAVE_QUADMATH)
using quad = __float128;
inline quad q_abs(quad x) { return fabsq(x); }
inline quad q_sqrt(quad x) { return sqrtq(x); }
inline quad q_exp(quad x) { return expq(x); }
#endif

// Cyclic Jacobi eigendecomposition for symmetric matrices, templated so the
// near-singular kernel paths can run in extended precision.
template <typename T>
struct JacobiEig {
  std::vector<T> values;            // ascending
  std::vector<std::vector<T>> vectors;  // column-major: vectors[j] is eigvec j
};

template <typename T, typename AbsFn, typename SqrtFn>
JacobiEig<T> jacobi_sym_eig(std::vector<std::vector<T>> A, AbsFn tabs, SqrtFn tsqrt,
                            int max_sweeps = 64) {
  const std::size_t n = A.size();
  std::vector<std::vector<T>> V(n, std::vector<T>(n, T(0)));
  for (std::size_t i = 0; i < n; ++i) V[i][i] = T(1);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    T off(0);
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += A[p][q] * A[p][q];
    if (!(tabs(off) > T(0))) break;
    T diag(0);
    for (std::size_t i = 0; i < n; ++i) diag += A[i][i] * A[i][i];
    T eps = std::numeric_limits<T>::epsilon();
    if (tabs(off) <= eps * eps * (diag + T(1))) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        T apq = A[p][q];
        if (tabs(apq) == T(0)) continue;
        T theta = (A[q][q] - A[p][p]) / (T(2) * apq);
        T t;
        if (tabs(theta) > T(1e30)) {
          t = T(1) / (T(2) * theta);
        } else {
          t = T(1) / (tabs(theta) + tsqrt(theta * theta + T(1)));
          if (theta < T(0)) t = -t;
        }
        T c = T(1) / tsqrt(t * t + T(1));
        T s = t * c;
        T tau = s / (T(1) + c);

        T app = A[p][p], aqq = A[q][q];
        A[p][p] = app - t * apq;
        A[q][q] = aqq + t * apq;
        A[p][q] = T(0);
        A[q][p] = T(0);
        for (std::size_t i = 0; i < n; ++i) {
          if (i != p && i != q) {
            T aip = A[i][p], aiq = A[i][q];
            A[i][p] = aip - s * (aiq + tau * aip);
            A[p][i] = A[i][p];
            A[i][q] = aiq + s * (aip - tau * aiq);
            A[q][i] = A[i][q];
          }
          T vip = V[i][p], viq = V[i][q];
          V[i][p] = vip - s * (viq + tau * vip);
          V[i][q] = viq + s * (vip - tau * viq);
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return A[a][a] < A[b][b]; });
  JacobiEig<T> out;
  out.values.resize(n);
  out.vectors.assign(n, std::vector<T>(n));
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = A[order[k]][order[k]];
    for (std::size_t i = 0; i < n; ++i) out.vectors[k][i] = V[i][order[k]];
  }
  return out;
}

inline JacobiEig<double> jacobi_sym_eig_d(const Mat& A) {
  std::vector<std::vector<double>> a(A.rows(), std::vector<double>(A.cols()));
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j) a[i][j] = A(i, j);
  return jacobi_sym_eig<double>(std::move(a), [](double x) { return std::fabs(x); },
                                [](double x) { return std::sqrt(x); });
}

}  // namespace yfree
