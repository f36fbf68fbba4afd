// Smoothing splines on scalar abscissae: cubic B-spline design matrix plus a
// curvature penalty, f_hat = B_q (B^T B + lambda Omega)^-1 B^T y.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "yfree/linalg.hpp"

namespace yfree {

// Cubic B-spline basis on the knot vector [b_lo x4, sorted x, b_hi x4],
// giving n + 4 basis functions over n training abscissae. The boundary knots
// sit a hair outside the data range so every training point is interior.
struct SplineBasis {
  std::vector<double> knots;
  int n_basis = 0;

  static SplineBasis build(const Vec& x) {
    const int n = static_cast<int>(x.size());
    std::vector<double> xs(x.data(), x.data() + n);
    std::sort(xs.begin(), xs.end());
    int distinct = n > 0 ? 1 : 0;
    for (int i = 1; i < n; ++i)
      if (xs[i] != xs[i - 1]) ++distinct;
    if (distinct < 4) throw std::invalid_argument("SplineBasis: need at least 4 distinct abscissae");
    const double span = xs.back() - xs.front();
    // One average knot gap: narrower boundary spans blow up the curvature
    // penalty of the edge basis functions, which scales as 1/width^3.
    const double margin = span / (distinct - 1);
    SplineBasis b;
    b.knots.reserve(n + 8);
    for (int i = 0; i < 4; ++i) b.knots.push_back(xs.front() - margin);
    b.knots.insert(b.knots.end(), xs.begin(), xs.end());
    for (int i = 0; i < 4; ++i) b.knots.push_back(xs.back() + margin);
    b.n_basis = n + 4;
    return b;
  }

  double lo() const { return knots[3]; }
  double hi() const { return knots[knots.size() - 4]; }

  // Largest span index j in [3, n_basis - 1] with knots[j] <= u < knots[j+1];
  // u is clamped to [lo, hi], the right endpoint maps to the last span.
  int find_span(double u) const {
    u = std::clamp(u, lo(), hi());
    if (u >= hi()) {
      int j = n_basis - 1;
      while (j > 3 && knots[j] == knots[j + 1]) --j;
      return j;
    }
    auto it = std::upper_bound(knots.begin() + 3, knots.end() - 4, u);
    return static_cast<int>(it - knots.begin()) - 1;
  }

  // Values and first two derivatives of the four cubics alive on u's span;
  // their basis indices are first .. first + 3.
  struct BasisPoint {
    int first = 0;
    std::array<double, 4> value{}, d1{}, d2{};
  };

  BasisPoint at(double u) const {
    u = std::clamp(u, lo(), hi());
    const int j = find_span(u);
    const std::vector<double>& t = knots;

    // Cox-de Boor triangle; zero-length denominators contribute nothing.
    std::array<double, 4> prev{}, cur{};
    prev[0] = 1.0;
    std::array<double, 2> n2{};
    std::array<double, 3> n3{};
    for (int k = 2; k <= 4; ++k) {
      for (int r = 0; r < k; ++r) {
        const int i = j - k + 1 + r;
        const double a = r >= 1 ? prev[r - 1] : 0.0;
        const double b = r <= k - 2 ? prev[r] : 0.0;
        const double den1 = t[i + k - 1] - t[i];
        const double den2 = t[i + k] - t[i + 1];
        cur[r] = (den1 > 0.0 ? (u - t[i]) / den1 * a : 0.0) +
                 (den2 > 0.0 ? (t[i + k] - u) / den2 * b : 0.0);
      }
      if (k == 2) n2 = {cur[0], cur[1]};
      if (k == 3) n3 = {cur[0], cur[1], cur[2]};
      prev = cur;
    }

    BasisPoint out;
    out.first = j - 3;
    out.value = cur;

    // d/du B_{i,k} = (k-1) (B_{i,k-1}/(t_{i+k-1}-t_i) - B_{i+1,k-1}/(t_{i+k}-t_{i+1}))
    std::array<double, 3> d3{};
    for (int r = 0; r < 3; ++r) {
      const int i = j - 2 + r;
      const double a = r >= 1 ? n2[r - 1] : 0.0;
      const double b = r <= 1 ? n2[r] : 0.0;
      const double den1 = t[i + 2] - t[i];
      const double den2 = t[i + 3] - t[i + 1];
      d3[r] = 2.0 * ((den1 > 0.0 ? a / den1 : 0.0) - (den2 > 0.0 ? b / den2 : 0.0));
    }
    for (int r = 0; r < 4; ++r) {
      const int i = j - 3 + r;
      const double den1 = t[i + 3] - t[i];
      const double den2 = t[i + 4] - t[i + 1];
      const double a = r >= 1 ? n3[r - 1] : 0.0;
      const double b = r <= 2 ? n3[r] : 0.0;
      out.d1[r] = 3.0 * ((den1 > 0.0 ? a / den1 : 0.0) - (den2 > 0.0 ? b / den2 : 0.0));
      const double da = r >= 1 ? d3[r - 1] : 0.0;
      const double db = r <= 2 ? d3[r] : 0.0;
      out.d2[r] = 3.0 * ((den1 > 0.0 ? da / den1 : 0.0) - (den2 > 0.0 ? db / den2 : 0.0));
    }
    return out;
  }

  Mat design(const Mat& xq) const {
    if (xq.cols() != 1) throw std::invalid_argument("SplineBasis: abscissae must be a single column");
    Mat B = Mat::Zero(xq.rows(), n_basis);
    for (int i = 0; i < xq.rows(); ++i) {
      BasisPoint p = at(xq(i, 0));
      for (int r = 0; r < 4; ++r) B(i, p.first + r) = p.value[r];
    }
    return B;
  }

  // Second-derivative Gram matrix. The integrand is piecewise quadratic, so
  // a 2-point Gauss-Legendre rule per knot interval is exact.
  Mat penalty() const {
    Mat omega = Mat::Zero(n_basis, n_basis);
    const double offset = 0.5 / std::sqrt(3.0);
    for (int j = 3; j <= n_basis - 1; ++j) {
      const double h = knots[j + 1] - knots[j];
      if (h <= 0.0) continue;
      const double c = 0.5 * (knots[j] + knots[j + 1]);
      for (double node : {c - offset * h, c + offset * h}) {
        BasisPoint p = at(node);
        const double w = 0.5 * h;
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b)
            omega(p.first + a, p.first + b) += w * (p.d2[a] * p.d2[b]);
      }
    }
    return omega;
  }
};

struct SplineFactor {
  SplineBasis basis;
  Mat B;      // n x (n+4) design at the training abscissae
  Mat gram;   // B^T B
  Mat omega;  // curvature penalty

  static SplineFactor fit(const Mat& x) {
    if (x.cols() != 1) throw std::invalid_argument("SplineFactor: abscissae must be a single column");
    SplineFactor f;
    f.basis = SplineBasis::build(x.col(0));
    f.B = f.basis.design(x);
    f.gram = f.B.transpose() * f.B;
    f.omega = f.basis.penalty();
    return f;
  }

  // (B^T B + lambda Omega)^-1 B^T; lambda = 0 takes the min-norm pseudo-inverse.
  Mat solve_transpose(double lambda) const {
    if (lambda < 0.0) throw std::invalid_argument("SplineFactor: lambda must be nonnegative");
    if (lambda == 0.0) {
      auto svd = thin_svd(B);
      const double cut = svd.s.size() ? 1e-12 * svd.s(0) : 0.0;
      Vec inv(svd.s.size());
      for (int i = 0; i < svd.s.size(); ++i) inv(i) = svd.s(i) > cut ? 1.0 / svd.s(i) : 0.0;
      return svd.V * inv.asDiagonal() * svd.U.transpose();
    }
    Mat A = gram + lambda * omega;
    auto ldlt = A.ldlt();
    Mat Z = ldlt.solve(B.transpose());
    // One refinement step; the system is ill-conditioned when lambda is huge.
    Z += ldlt.solve(B.transpose() - A * Z);
    return Z;
  }

  Vec coefficients(const Vec& y, double lambda) const { return solve_transpose(lambda) * y; }

  Mat design(const Mat& xq) const { return basis.design(xq); }

  Mat smoother_rows(const Mat& xq, double lambda) const {
    return design(xq) * solve_transpose(lambda);
  }

  Mat smoother_train(double lambda) const { return B * solve_transpose(lambda); }
};

}  // namespace yfree
