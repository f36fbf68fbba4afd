// Model-selection criteria: y-based MSV/GCV/LOOCV and the y-free family.
#pragma once

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "yfree/linalg.hpp"

namespace yfree {

struct CriterionValue {
  double value = 0.0;
  double trace_term = std::numeric_limits<double>::quiet_NaN();
  double tr_S = std::numeric_limits<double>::quiet_NaN();
};

// |y^T (a I/n - S_v^T S_v / n_v) y|; a is the robustness knob, default 1.
inline CriterionValue msv(const Vec& y, const Mat& S_v, double a = 1.0) {
  const auto n = static_cast<double>(y.size());
  if (S_v.cols() != y.size()) throw std::invalid_argument("msv: shape mismatch");
  const auto n_v = static_cast<double>(S_v.rows());
  double sd = std::sqrt((y.array() - y.mean()).square().sum() / n);
  if (std::abs(y.mean()) > 1e-8 * sd)
    std::fprintf(stderr, "msv: warning, y does not look centered (mean %g, sd %g)\n",
                 y.mean(), sd);
  double quad = a * y.squaredNorm() / n - (S_v * y).squaredNorm() / n_v;
  CriterionValue out;
  out.value = std::abs(quad);
  out.trace_term = quad;
  return out;
}

// |1 - Tr(S_v^T S_v)/n_v|
inline CriterionValue msv_tr(const Mat& S_v) {
  const auto n_v = static_cast<double>(S_v.rows());
  CriterionValue out;
  out.trace_term = S_v.squaredNorm() / n_v;
  out.value = std::abs(1.0 - out.trace_term);
  return out;
}

// |1 - Tr(E_outer)| where E_outer = E(s* s*^T) over query covariates.
inline CriterionValue msv_expected(const Mat& E_outer) {
  if (E_outer.rows() != E_outer.cols()) throw std::invalid_argument("msv_expected: not square");
  double asym = (E_outer - E_outer.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8) throw std::invalid_argument("msv_expected: asymmetric input");
  CriterionValue out;
  out.trace_term = E_outer.trace();
  out.value = std::abs(1.0 - out.trace_term);
  return out;
}

// ||a I/n - S_v^T S_v / n_v|| under the chosen (semi)norm.
inline CriterionValue msv_norm(const Mat& S_v, MatrixNorm kind, double a = 1.0) {
  const auto n = static_cast<double>(S_v.cols());
  const auto n_v = static_cast<double>(S_v.rows());
  Mat A = -(S_v.transpose() * S_v) / n_v;
  A.diagonal().array() += a / n;
  CriterionValue out;
  out.value = matrix_norm(A, kind);
  out.trace_term = A.trace();
  return out;
}

// n y^T (I-S)^T (I-S) y / Tr(I-S)^2
inline CriterionValue gcv(const Vec& y, const Mat& S) {
  const auto n = static_cast<double>(y.size());
  double tr = n - S.trace();
  if (std::abs(tr) < 1e-12 * n) throw std::domain_error("gcv: Tr(I-S) is zero");
  CriterionValue out;
  out.tr_S = S.trace();
  out.value = n * (y - S * y).squaredNorm() / (tr * tr);
  return out;
}

// ||(I-S)^T (I-S)|| / Tr(I-S)^2
inline CriterionValue gcv_yfree(const Mat& S, MatrixNorm kind) {
  const auto n = static_cast<double>(S.rows());
  double tr = n - S.trace();
  if (std::abs(tr) < 1e-12 * n) throw std::domain_error("gcv_yfree: Tr(I-S) is zero");
  Mat R = -S;
  R.diagonal().array() += 1.0;
  CriterionValue out;
  out.tr_S = S.trace();
  out.value = matrix_norm(R.transpose() * R, kind) / (tr * tr);
  return out;
}

enum class InSampleMode { StS, S };

enum class CriterionKind {
  msv,
  msv_tr,
  msv_norm,
  msv_expected,
  gcv,
  gcv_yfree,
  loocv,
  kfold_cv,
  in_sample_msv_yfree,
};

struct CriterionSpec {
  CriterionKind kind = CriterionKind::msv_norm;
  MatrixNorm norm = MatrixNorm::frobenius;
  int folds = 10;
  double a = 1.0;
  InSampleMode in_sample = InSampleMode::StS;
};

// Criteria that never read the response.
inline bool criterion_is_yfree(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::msv_tr:
    case CriterionKind::msv_norm:
    case CriterionKind::msv_expected:
    case CriterionKind::gcv_yfree:
    case CriterionKind::in_sample_msv_yfree:
      return true;
    default:
      return false;
  }
}

// ||a I/n - S^T S/n|| or ||a I/n - S/n||
inline CriterionValue in_sample_msv_yfree(const Mat& S, InSampleMode mode, MatrixNorm kind,
                                          double a = 1.0) {
  const auto n = static_cast<double>(S.rows());
  Mat A = mode == InSampleMode::StS ? Mat((-S.transpose() * S) / n) : Mat(-S / n);
  A.diagonal().array() += a / n;
  CriterionValue out;
  out.value = matrix_norm(A, kind);
  out.trace_term = A.trace();
  return out;
}

// (1/n) sum ((y_i - fhat_i)/(1 - S_ii))^2
inline CriterionValue loocv(const Vec& y, const Mat& S) {
  const auto n = static_cast<double>(y.size());
  Vec fhat = S * y;
  double acc = 0.0;
  for (int i = 0; i < y.size(); ++i) {
    double denom = 1.0 - S(i, i);
    if (std::abs(denom) < 1e-12) throw std::domain_error("loocv: S_ii = 1");
    double r = (y(i) - fhat(i)) / denom;
    acc += r * r;
  }
  CriterionValue out;
  out.tr_S = S.trace();
  out.value = acc / n;
  return out;
}

// Effective number of parameters.
inline double edof(const Mat& S) {
  if (S.rows() != S.cols()) throw std::invalid_argument("edof: not square");
  return S.trace();
}

}  // namespace yfree
