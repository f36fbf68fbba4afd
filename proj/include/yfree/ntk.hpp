// One-hidden-layer network, its tangent kernel, and the iterative smoother
// that tracks momentum training without ever reading the true response.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "yfree/linalg.hpp"
#include "yfree/rng.hpp"

namespace yfree {

enum class LossKind { squared, cross_entropy };

// Logits to compact class probabilities, f_j = e^{g_j} / (1 + sum_k e^{g_k});
// the last class is implied. Shifted by the max logit for overflow safety.
inline Mat compact_softmax(const Mat& logits) {
  Mat f(logits.rows(), logits.cols());
  for (int i = 0; i < logits.rows(); ++i) {
    const double shift = std::max(0.0, logits.row(i).maxCoeff());
    double denom = std::exp(-shift);
    for (int j = 0; j < logits.cols(); ++j) denom += std::exp(logits(i, j) - shift);
    for (int j = 0; j < logits.cols(); ++j) f(i, j) = std::exp(logits(i, j) - shift) / denom;
  }
  return f;
}

// Clip to [1e-9, 1 - 1e-9] and renormalize rows whose mass reaches 1 - 1e-9,
// keeping the implied last-class probability positive.
inline Mat clamp_probabilities(Mat f) {
  constexpr double eps = 1e-9;
  for (int i = 0; i < f.rows(); ++i) {
    for (int j = 0; j < f.cols(); ++j) f(i, j) = std::clamp(f(i, j), eps, 1.0 - eps);
    const double total = f.row(i).sum();
    if (total >= 1.0 - eps) f.row(i) *= (1.0 - eps) / total;
  }
  return f;
}

// diag(1/f) + 11^T / (1 - sum f): maps f - y to the compact cross-entropy
// gradient in probability space.
inline Mat ce_weight_matrix(const Vec& f_row) {
  const int c = static_cast<int>(f_row.size());
  double total = 0.0;
  for (int j = 0; j < c; ++j) {
    if (!(f_row(j) > 0.0 && f_row(j) < 1.0))
      throw std::invalid_argument("ce_weight_matrix: probabilities must lie in (0, 1)");
    total += f_row(j);
  }
  if (!(total < 1.0)) throw std::invalid_argument("ce_weight_matrix: probabilities must sum below 1");
  Mat W = Mat::Constant(c, c, 1.0 / (1.0 - total));
  for (int j = 0; j < c; ++j) W(j, j) += 1.0 / f_row(j);
  return W;
}

inline double ce_loss_row(const Vec& f, const Vec& y) {
  double mass_f = f.sum(), mass_y = y.sum();
  double loss = -(1.0 - mass_y) * std::log(1.0 - mass_f);
  for (int j = 0; j < f.size(); ++j) loss -= y(j) * std::log(f(j));
  return loss;
}

struct Network {
  enum class Kind { tanh_hidden, linear };
  Kind kind = Kind::tanh_hidden;
  int d = 0, h = 0, d_out = 1;
  Mat W1;  // h x d
  Vec b1;  // h
  Mat W2;  // d_out x h (tanh) or d_out x d (linear, no biases)
  Vec b2;  // d_out

  static Network init_tanh(int d, int h, int d_out, std::uint64_t seed) {
    if (d < 1 || h < 1 || d_out < 1) throw std::invalid_argument("Network: bad architecture");
    Network net;
    net.kind = Kind::tanh_hidden;
    net.d = d;
    net.h = h;
    net.d_out = d_out;
    Rng rng = Rng(seed).derive("network-init");
    net.W1 = Mat(h, d);
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < d; ++j) net.W1(i, j) = rng.normal() / std::sqrt(static_cast<double>(d));
    net.b1 = Vec::Zero(h);
    net.W2 = Mat(d_out, h);
    for (int i = 0; i < d_out; ++i)
      for (int j = 0; j < h; ++j) net.W2(i, j) = rng.normal() / std::sqrt(static_cast<double>(h));
    net.b2 = Vec::Zero(d_out);
    return net;
  }

  static Network init_linear(int d, int d_out, std::uint64_t seed) {
    if (d < 1 || d_out < 1) throw std::invalid_argument("Network: bad architecture");
    Network net;
    net.kind = Kind::linear;
    net.d = d;
    net.h = 0;
    net.d_out = d_out;
    Rng rng = Rng(seed).derive("network-init");
    net.W2 = Mat(d_out, d);
    for (int i = 0; i < d_out; ++i)
      for (int j = 0; j < d; ++j) net.W2(i, j) = rng.normal() / std::sqrt(static_cast<double>(d));
    return net;
  }

  int n_params() const {
    return kind == Kind::linear ? d_out * d : h * d + h + d_out * h + d_out;
  }

  // Flattening order: W1 row-major, b1, W2 row-major, b2; linear nets carry W2 only.
  Vec params() const {
    Vec theta(n_params());
    int at = 0;
    if (kind == Kind::tanh_hidden) {
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < d; ++j) theta(at++) = W1(i, j);
      for (int i = 0; i < h; ++i) theta(at++) = b1(i);
    }
    for (int i = 0; i < d_out; ++i)
      for (int j = 0; j < W2.cols(); ++j) theta(at++) = W2(i, j);
    if (kind == Kind::tanh_hidden)
      for (int i = 0; i < d_out; ++i) theta(at++) = b2(i);
    return theta;
  }

  void set_params(const Vec& theta) {
    if (theta.size() != n_params()) throw std::invalid_argument("Network: parameter length mismatch");
    int at = 0;
    if (kind == Kind::tanh_hidden) {
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < d; ++j) W1(i, j) = theta(at++);
      for (int i = 0; i < h; ++i) b1(i) = theta(at++);
    }
    for (int i = 0; i < d_out; ++i)
      for (int j = 0; j < W2.cols(); ++j) W2(i, j) = theta(at++);
    if (kind == Kind::tanh_hidden)
      for (int i = 0; i < d_out; ++i) b2(i) = theta(at++);
  }

  Mat forward(const Mat& X) const {
    if (X.cols() != d) throw std::invalid_argument("Network: input dim mismatch");
    if (kind == Kind::linear) return X * W2.transpose();
    Mat H = (X * W1.transpose()).rowwise() + b1.transpose();
    H = H.array().tanh().matrix();
    return (H * W2.transpose()).rowwise() + b2.transpose();
  }

  Mat probabilities(const Mat& X) const { return clamp_probabilities(compact_softmax(forward(X))); }

  // Jacobian of the raw outputs, rows in vectorized order (point i, output a)
  // -> i * d_out + a, columns in the parameter flattening order.
  Mat jacobian(const Mat& X) const {
    if (X.cols() != d) throw std::invalid_argument("Network: input dim mismatch");
    const int rows = static_cast<int>(X.rows());
    Mat J = Mat::Zero(rows * d_out, n_params());
    if (kind == Kind::linear) {
      for (int i = 0; i < rows; ++i)
        for (int a = 0; a < d_out; ++a)
          for (int k = 0; k < d; ++k) J(i * d_out + a, a * d + k) = X(i, k);
      return J;
    }
    Mat H = (X * W1.transpose()).rowwise() + b1.transpose();
    H = H.array().tanh().matrix();
    const int w1_end = h * d;
    const int b1_end = w1_end + h;
    const int w2_end = b1_end + d_out * h;
    for (int i = 0; i < rows; ++i) {
      for (int a = 0; a < d_out; ++a) {
        const int row = i * d_out + a;
        for (int j = 0; j < h; ++j) {
          const double sech2 = 1.0 - H(i, j) * H(i, j);
          const double back = W2(a, j) * sech2;
          for (int k = 0; k < d; ++k) J(row, j * d + k) = back * X(i, k);
          J(row, w1_end + j) = back;
          J(row, b1_end + a * h + j) = H(i, j);
        }
        J(row, w2_end + a) = 1.0;
      }
    }
    return J;
  }

  // Jacobian of compact-softmax probabilities: per point, left-multiply the
  // logits Jacobian by diag(f) - f f^T.
  Mat prob_jacobian(const Mat& X) const {
    Mat J = jacobian(X);
    Mat f = probabilities(X);
    for (int i = 0; i < X.rows(); ++i) {
      Mat block = J.middleRows(i * d_out, d_out);
      Vec fi = f.row(i).transpose();
      J.middleRows(i * d_out, d_out) = (Mat(fi.asDiagonal()) - fi * fi.transpose()) * block;
    }
    return J;
  }
};

// K* = J_all J_train^T in the vectorized layout; the training block is the
// Gram matrix of the training Jacobian rows.
inline Mat ntk_kernel(const Network& net, const Mat& X_all, const Mat& X_train) {
  return net.jacobian(X_all) * net.jacobian(X_train).transpose();
}

// Generalized kernel for the compact cross-entropy loss. The probability
// Jacobian times the per-point weight matrix collapses onto the logits
// Jacobian: (diag(f) - f f^T) (diag(1/f) + 11^T/(1 - sum f)) = I.
inline Mat ce_generalized_kernel(const Network& net, const Mat& X_all, const Mat& X_train) {
  return net.prob_jacobian(X_all) * net.jacobian(X_train).transpose();
}

enum class MonitorRows { train, extra, all };

struct TrainLog {
  std::vector<double> loss;       // per step, evaluated before the update
  std::vector<int> epoch;         // steps at which the monitor ran
  std::vector<double> monitor;
};

struct TrainResult {
  Mat S_star;       // monitor-minimizing smoother, ((n+m) d_out) x (n d_out)
  int best_epoch = 0;
  Mat S_star_last;
  Vec f0;           // vectorized predictions at theta_0 on train + extra rows
  Vec f_last;       // vectorized direct predictions at the final parameters
  Network net_final;
  TrainLog log;
};

namespace detail {

inline Vec vectorize_rows(const Mat& A) {
  Vec v(A.rows() * A.cols());
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j) v(i * A.cols() + j) = A(i, j);
  return v;
}

}  // namespace detail

// Momentum training on y_build with the smoother recursion run in lockstep:
//   theta_{k+1} = theta_k + gamma (theta_k - theta_{k-1}) + eta J^T (y - f)
//   S*_{k+1} = S*_k + gamma (S*_k - S*_{k-1}) + eta K*_{k+1} (I - S_k)
// with the kernel taken at the fresh parameters. The monitor sees only
// smoother rows, never a response; ties keep the earliest epoch.
inline TrainResult train_smoother(Network net, const Mat& X_train, const Mat& X_extra,
                                  const Mat& y_build, LossKind loss, double eta, double gamma,
                                  int epochs, MonitorRows rows = MonitorRows::extra,
                                  const std::function<double(const Mat&)>& monitor = {},
                                  int monitor_every = 1) {
  const int n = static_cast<int>(X_train.rows());
  const int m = static_cast<int>(X_extra.rows());
  const int q = net.d_out;
  if (y_build.rows() != n || y_build.cols() != q)
    throw std::invalid_argument("train_smoother: y_build must be n x d_out");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("train_smoother: gamma must lie in [0, 1)");
  if (epochs < 0) throw std::invalid_argument("train_smoother: negative epoch count");
  if (monitor_every < 1) throw std::invalid_argument("train_smoother: monitor_every must be >= 1");

  Mat X_all(n + m, X_train.cols());
  X_all.topRows(n) = X_train;
  if (m > 0) X_all.bottomRows(m) = X_extra;

  const bool ce = loss == LossKind::cross_entropy;
  auto predict_all = [&]() { return ce ? net.probabilities(X_all) : net.forward(X_all); };

  auto block_of = [&](const Mat& S) -> Mat {
    switch (rows) {
      case MonitorRows::train: return S.topRows(n * q);
      case MonitorRows::extra: return S.bottomRows(m * q);
      case MonitorRows::all: return S;
    }
    return S;
  };
  auto run_monitor = [&](const Mat& S) -> double {
    Mat blk = block_of(S);
    if (blk.rows() == 0) return 0.0;
    if (monitor) return monitor(blk);
    return std::abs(1.0 - (blk.transpose() * blk).trace() / static_cast<double>(blk.rows()));
  };

  TrainResult out;
  out.f0 = detail::vectorize_rows(predict_all());

  Mat S_prev = Mat::Zero((n + m) * q, n * q);
  Mat S_curr = S_prev;
  out.S_star = S_curr;
  out.best_epoch = 0;
  double best_value = run_monitor(S_curr);

  Vec theta = net.params();
  Vec vel = Vec::Zero(theta.size());
  Mat J_all = net.jacobian(X_all);

  for (int k = 0; k < epochs; ++k) {
    Mat pred = predict_all();
    Mat resid = y_build - pred.topRows(n);
    double loss_k = 0.0;
    if (ce) {
      for (int i = 0; i < n; ++i)
        loss_k += ce_loss_row(pred.row(i).transpose(), y_build.row(i).transpose());
    } else {
      loss_k = 0.5 * resid.squaredNorm();
    }
    if (!std::isfinite(loss_k))
      throw std::runtime_error("train_smoother: diverged at step " + std::to_string(k));
    out.log.loss.push_back(loss_k);

    Vec grad = J_all.topRows(n * q).transpose() * detail::vectorize_rows(resid);
    vel = gamma * vel + eta * grad;
    theta += vel;
    net.set_params(theta);

    J_all = net.jacobian(X_all);
    Mat K = ce ? Mat(net.prob_jacobian(X_all) * J_all.topRows(n * q).transpose())
               : Mat(J_all * J_all.topRows(n * q).transpose());
    Mat S_next = S_curr + gamma * (S_curr - S_prev) +
                 eta * K * (Mat::Identity(n * q, n * q) - S_curr.topRows(n * q));
    S_prev = std::move(S_curr);
    S_curr = std::move(S_next);
    if (!S_curr.allFinite())
      throw std::runtime_error("train_smoother: diverged at step " + std::to_string(k));

    if ((k + 1) % monitor_every == 0 || k + 1 == epochs) {
      const double value = run_monitor(S_curr);
      out.log.epoch.push_back(k + 1);
      out.log.monitor.push_back(value);
      if (value < best_value) {
        best_value = value;
        out.S_star = S_curr;
        out.best_epoch = k + 1;
      }
    }
  }

  out.S_star_last = std::move(S_curr);
  out.f_last = detail::vectorize_rows(predict_all());
  out.net_final = std::move(net);
  return out;
}

// Sup-norm gap between direct predictions and the smoother form
// S*(y_build - f_0) + f*_0 at the end of training.
inline double smoother_discrepancy(const TrainResult& result, const Mat& y_build) {
  const int nq = static_cast<int>(result.S_star_last.cols());
  Vec y_vec = detail::vectorize_rows(y_build);
  Vec via_smoother = result.S_star_last * (y_vec - result.f0.head(nq)) + result.f0;
  return (result.f_last - via_smoother).cwiseAbs().maxCoeff();
}

// Runs the same initialization at (eta, steps) and (eta/2, 2 steps): matched
// training time, halved step size. Returns the two discrepancies.
inline std::pair<double, double> smoother_error(const Network& net, const Mat& X_train,
                                                const Mat& X_extra, const Mat& y_build,
                                                LossKind loss, double eta, double gamma,
                                                int steps) {
  TrainResult coarse = train_smoother(net, X_train, X_extra, y_build, loss, eta, gamma, steps);
  TrainResult fine = train_smoother(net, X_train, X_extra, y_build, loss, eta / 2.0, gamma, 2 * steps);
  return {smoother_discrepancy(coarse, y_build), smoother_discrepancy(fine, y_build)};
}

}  // namespace yfree
