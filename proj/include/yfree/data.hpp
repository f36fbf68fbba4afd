// Datasets, encodings, standardization, synthetic generators, metrics.
#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "yfree/linalg.hpp"
#include "yfree/rng.hpp"

namespace yfree {

struct Dataset {
  Mat X;
  std::optional<Vec> response;          // regression target
  std::optional<std::vector<int>> labels;  // classification target, values 1..c
  int n_classes = 0;

  int n() const { return static_cast<int>(X.rows()); }
  int d() const { return static_cast<int>(X.cols()); }
};

struct CompactOneHot {
  Mat Y;  // n x (c-1), rows with at most one 1; all-zero row encodes class c
  int c = 2;
};

struct StandardizationStats {
  Vec mean;
  Vec scale;  // strictly positive; degenerate columns get 1
};

// Population-std convention (divide by n); constant columns map to 0 / scale 1.
inline StandardizationStats fit_standardization(const Mat& X_fit) {
  if (X_fit.rows() == 0) throw std::invalid_argument("standardize: empty fit matrix");
  const auto n = static_cast<double>(X_fit.rows());
  StandardizationStats st;
  st.mean = X_fit.colwise().mean();
  st.scale = ((X_fit.rowwise() - st.mean.transpose()).array().square().colwise().sum() / n)
                 .sqrt()
                 .matrix();
  for (int j = 0; j < st.scale.size(); ++j)
    if (!(st.scale(j) > 0.0)) st.scale(j) = 1.0;
  return st;
}

inline Mat apply_standardization(const Mat& X, const StandardizationStats& st) {
  if (X.cols() != st.mean.size()) throw std::invalid_argument("standardize: column mismatch");
  return (X.rowwise() - st.mean.transpose()).array().rowwise() /
         st.scale.transpose().array();
}

inline std::pair<Mat, StandardizationStats> standardize(const Mat& X_fit, const Mat& X_apply) {
  auto st = fit_standardization(X_fit);
  return {apply_standardization(X_apply, st), st};
}

inline CompactOneHot one_hot_compact(const std::vector<int>& labels, int c) {
  if (c < 2) throw std::invalid_argument("one_hot_compact: need c >= 2");
  CompactOneHot out;
  out.c = c;
  out.Y = Mat::Zero(static_cast<int>(labels.size()), c - 1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int lab = labels[i];
    if (lab < 1 || lab > c) throw std::invalid_argument("one_hot_compact: label out of range");
    if (lab < c) out.Y(static_cast<int>(i), lab - 1) = 1.0;
  }
  return out;
}

// Implied class-c score is 1 - sum of the c-1 explicit scores; ties go to the
// lowest class index.
inline std::vector<int> decode_labels(const Mat& F_hat, int c) {
  if (c < 2 || F_hat.cols() != c - 1) throw std::invalid_argument("decode_labels: bad shape");
  std::vector<int> out(F_hat.rows());
  for (int i = 0; i < F_hat.rows(); ++i) {
    if (!F_hat.row(i).allFinite()) throw std::invalid_argument("decode_labels: non-finite row");
    int best = 1;
    double best_score = F_hat(i, 0);
    for (int j = 1; j < c - 1; ++j) {
      if (F_hat(i, j) > best_score) {
        best_score = F_hat(i, j);
        best = j + 1;
      }
    }
    double last = 1.0 - F_hat.row(i).sum();
    if (last > best_score) best = c;
    out[i] = best;
  }
  return out;
}

inline double r_squared(const Vec& y, const Vec& f_hat) {
  if (y.size() != f_hat.size()) throw std::invalid_argument("r_squared: length mismatch");
  double ybar = y.mean();
  double tot = (y.array() - ybar).square().sum();
  if (!(tot > 0.0)) throw std::invalid_argument("r_squared: constant y");
  return 1.0 - (y - f_hat).squaredNorm() / tot;
}

inline double accuracy(const std::vector<int>& labels, const std::vector<int>& predicted) {
  if (labels.empty() || labels.size() != predicted.size())
    throw std::invalid_argument("accuracy: bad lengths");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == predicted[i]) ++hit;
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

inline Vec sample_mean(const Mat& X) { return X.colwise().mean(); }

inline Mat sample_covariance(const Mat& X) {
  const int n = static_cast<int>(X.rows());
  if (n < 2) throw std::invalid_argument("sample_covariance: need n >= 2");
  Mat C = X.rowwise() - X.colwise().mean();
  return (C.transpose() * C) / static_cast<double>(n - 1);
}

// Draws X_v ~ N(mean(X), cov(X) + eps I), eps = 1e-8 tr(cov)/d; the jitter keeps
// the factorization valid when the sample covariance is singular.
inline Mat sample_validation_covariates(const Mat& X, int n_v, std::uint64_t seed) {
  const int d = static_cast<int>(X.cols());
  Vec mu = sample_mean(X);
  Mat Sigma = sample_covariance(X);
  double eps = 1e-8 * Sigma.trace() / static_cast<double>(d);
  Sigma.diagonal().array() += eps;
  SymEig eig = sym_eig(Sigma);
  Vec root = eig.values.cwiseMax(0.0).cwiseSqrt();
  Mat F = eig.vectors * root.asDiagonal();
  Rng rng = Rng(seed).derive("validation-covariates");
  Mat Z(n_v, d);
  for (int i = 0; i < n_v; ++i)
    for (int j = 0; j < d; ++j) Z(i, j) = rng.normal();
  Mat out = Z * F.transpose();
  out.rowwise() += mu.transpose();
  return out;
}

struct SinDemoData {
  Dataset train;
  Vec f_true;    // sin(2 pi x) at training x
  Mat grid;      // 1000 x 1 equispaced on [-1, 1]
  Vec grid_true; // sin(2 pi x) on the grid
};

inline SinDemoData synth_sin(int n, double noise_sd, std::uint64_t seed) {
  SinDemoData out;
  Rng rng = Rng(seed).derive("synth-sin");
  out.train.X = Mat(n, 1);
  out.f_true = Vec(n);
  Vec y(n);
  for (int i = 0; i < n; ++i) {
    double x = rng.uniform(-1.0, 1.0);
    out.train.X(i, 0) = x;
    out.f_true(i) = std::sin(2.0 * std::numbers::pi * x);
    y(i) = out.f_true(i) + noise_sd * rng.normal();
  }
  out.train.response = y;
  const int m = 1000;
  out.grid = Mat(m, 1);
  out.grid_true = Vec(m);
  for (int i = 0; i < m; ++i) {
    double x = -1.0 + 2.0 * static_cast<double>(i) / (m - 1);
    out.grid(i, 0) = x;
    out.grid_true(i) = std::sin(2.0 * std::numbers::pi * x);
  }
  return out;
}

struct SynthLinearData {
  Mat X_train, X_test;
  Vec y_train, y_test;
  Vec beta;
};

// Linear model with isotropic Gaussian covariates, ||beta||^2 = snr, noise sd 1.
inline SynthLinearData synth_linear(int n_train, int n_test, int d, double snr,
                                    std::uint64_t seed) {
  Rng rng = Rng(seed).derive("synth-linear");
  SynthLinearData out;
  out.beta = Vec(d);
  for (int j = 0; j < d; ++j) out.beta(j) = rng.normal();
  out.beta *= std::sqrt(snr) / out.beta.norm();
  auto draw = [&](int rows, Mat& X, Vec& y) {
    X = Mat(rows, d);
    y = Vec(rows);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < d; ++j) X(i, j) = rng.normal();
      y(i) = X.row(i).dot(out.beta) + rng.normal();
    }
  };
  draw(n_train, out.X_train, out.y_train);
  draw(n_test, out.X_test, out.y_test);
  return out;
}

inline Vec random_response_gaussian(int n, std::uint64_t seed) {
  Rng rng = Rng(seed).derive("random-response");
  Vec y(n);
  for (int i = 0; i < n; ++i) y(i) = rng.normal();
  return y;
}

inline CompactOneHot random_response_categorical(int n, int c, std::uint64_t seed) {
  if (c < 2) throw std::invalid_argument("random_response_categorical: need c >= 2");
  Rng rng = Rng(seed).derive("random-response");
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = static_cast<int>(rng.uniform_int(c)) + 1;
  return one_hot_compact(labels, c);
}

}  // namespace yfree
