// Asymptotic ridge risk under the Marchenko-Pastur limit: closed forms for
// the variance curve, the zero-variance regularization level, and risk ratios.
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace yfree {

// Stieltjes transform of the MP law with ratio gamma, evaluated at z = -lambda.
inline double mp_stieltjes(double lambda, double gamma) {
  double z = -lambda;
  double r = std::sqrt((1.0 - gamma - z) * (1.0 - gamma - z) - 4.0 * gamma * z);
  return (1.0 - gamma - z - r) / (2.0 * gamma * z);
}

inline double mp_stieltjes_deriv(double lambda, double gamma) {
  double z = -lambda;
  double r = std::sqrt((1.0 - gamma - z) * (1.0 - gamma - z) - 4.0 * gamma * z);
  return (z * (1.0 + gamma - z) / r - 1.0 + gamma + r) / (2.0 * gamma * z * z);
}

// Asymptotic prediction variance of ridge at regularization lambda.
inline double asym_variance(double lambda, double gamma, double sigma2 = 1.0) {
  double den = std::sqrt((1.0 - gamma + lambda) * (1.0 - gamma + lambda) +
                         4.0 * gamma * lambda);
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return sigma2 / 2.0 * ((1.0 + gamma + lambda) / den - 1.0);
}

// Same quantity through the Stieltjes transform; consistency oracle for tests.
inline double asym_variance_stieltjes(double lambda, double gamma, double sigma2 = 1.0) {
  return sigma2 * gamma *
         (mp_stieltjes(lambda, gamma) - lambda * mp_stieltjes_deriv(lambda, gamma));
}

// Ridgeless risk; diverges at gamma = 1.
inline double asym_risk_zero(double gamma, double snr, double sigma2 = 1.0) {
  if (gamma == 1.0) return std::numeric_limits<double>::infinity();
  if (gamma < 1.0) return sigma2 * gamma / (1.0 - gamma);
  return sigma2 * (snr * (1.0 - 1.0 / gamma) + 1.0 / (gamma - 1.0));
}

inline double asym_risk(double lambda, double gamma, double snr, double sigma2 = 1.0) {
  if (!(lambda >= 0.0) || !(gamma > 0.0) || !(snr > 0.0))
    throw std::invalid_argument("asym_risk: bad arguments");
  if (lambda == 0.0) return asym_risk_zero(gamma, snr, sigma2);
  return sigma2 * gamma *
         (mp_stieltjes(lambda, gamma) -
          lambda * (1.0 - snr * lambda / gamma) * mp_stieltjes_deriv(lambda, gamma));
}

inline double lambda_opt(double gamma, double snr) {
  if (!(gamma > 0.0) || !(snr > 0.0)) throw std::invalid_argument("lambda_opt: bad arguments");
  return gamma / snr;
}

inline double asym_risk_opt(double gamma, double snr, double sigma2 = 1.0) {
  double s = snr;
  return sigma2 / 2.0 *
         (s - s / gamma - 1.0 + std::sqrt(4.0 * s + (1.0 - s + s / gamma) * (1.0 - s + s / gamma)));
}

// Regularization level at which the asymptotic prediction variance matches
// the noise level; strictly positive only for gamma in (1/2, 2).
inline double lambda_T(double gamma) {
  if (0.5 < gamma && gamma < 2.0) return 3.0 * std::sqrt(gamma / 2.0) - gamma - 1.0;
  return 0.0;
}

inline double asym_risk_T(double gamma, double snr, double sigma2 = 1.0) {
  if (0.5 < gamma && gamma < 2.0) {
    double q = std::sqrt(2.0 * gamma) - 1.0;
    return sigma2 * (1.0 + snr * q * q / gamma);
  }
  return asym_risk_zero(gamma, snr, sigma2);
}

// Golden-section minimizer on [lo, hi] for unimodal f.
inline double golden_section_min(const std::function<double(double)>& f, double lo,
                                 double hi, int iters = 200) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < iters; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  return (a + b) / 2.0;
}

struct RiskCurvePoint {
  double gamma, snr, r_T, r_opt, r_zero, ratio;
};

struct RatioScanResult {
  double max_ratio = 0.0;
  double gamma_at = 0.0;
  double snr_at = 0.0;
  std::vector<RiskCurvePoint> table;
};

// Scan r_T / r_opt over a (gamma, snr) grid; keep_table controls whether the
// full curve table is retained for CSV export.
inline RatioScanResult ratio_scan(const std::vector<double>& gammas,
                                  const std::vector<double>& snrs, double sigma2 = 1.0,
                                  bool keep_table = false) {
  RatioScanResult out;
  if (keep_table) out.table.reserve(gammas.size() * snrs.size());
  for (double s : snrs) {
    for (double g : gammas) {
      double rt = asym_risk_T(g, s, sigma2);
      double ro = asym_risk_opt(g, s, sigma2);
      double ratio = rt / ro;
      if (ratio > out.max_ratio) {
        out.max_ratio = ratio;
        out.gamma_at = g;
        out.snr_at = s;
      }
      if (keep_table)
        out.table.push_back({g, s, rt, ro, asym_risk_zero(g, s, sigma2), ratio});
    }
  }
  return out;
}

inline std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> v(count);
  if (count == 1) {
    v[0] = lo;
    return v;
  }
  for (int i = 0; i < count; ++i)
    v[i] = lo + (hi - lo) * static_cast<double>(i) / (count - 1);
  return v;
}

inline std::vector<double> logspace(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > 0.0)) throw std::invalid_argument("logspace: positive bounds");
  std::vector<double> v = linspace(std::log(lo), std::log(hi), count);
  for (double& x : v) x = std::exp(x);
  return v;
}

}  // namespace yfree
