#include <doctest.h>

#include <cmath>

#include "yfree/criteria.hpp"
#include "yfree/data.hpp"
#include "yfree/rng.hpp"
#include "yfree/smoothers.hpp"

using namespace yfree;

namespace {

Mat random_matrix(int n, int d, Rng& rng) {
  Mat X(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = rng.normal();
  return X;
}

}  // namespace

TEST_CASE("msv hand cases") {
  Vec z = Vec::Zero(3);
  Mat Sv = Mat::Zero(5, 3);
  CHECK(msv(z, Sv).value == 0.0);

  // S_v^T S_v / n_v = I/n: exact moment match for every y
  int n = 3, n_v = 6;
  Mat M = Mat::Zero(n_v, n);
  double c = std::sqrt(static_cast<double>(n_v) / n);
  M.topRows(3) = c * Mat::Identity(3, 3);
  Rng rng(201);
  for (int t = 0; t < 5; ++t) {
    Vec y = random_matrix(3, 1, rng).col(0);
    y.array() -= y.mean();
    CHECK(msv(y, M).value == doctest::Approx(0.0).epsilon(1e-14));
  }

  Vec ones = Vec::Ones(2);
  CHECK(msv(ones, Mat::Zero(4, 2)).value == doctest::Approx(1.0));

  // robustness knob scales the I/n term
  CHECK(msv(ones, Mat::Zero(4, 2), 2.0).value == doctest::Approx(2.0));

  Vec bad(3);
  bad.setOnes();
  CHECK_THROWS_AS(msv(bad, Mat::Zero(4, 2)), std::invalid_argument);
}

TEST_CASE("msv_tr hand cases") {
  CHECK(msv_tr(Mat::Zero(4, 3)).value == 1.0);

  // orthogonal rows with Tr(S_v^T S_v) = n_v
  Mat O = Mat::Identity(3, 3);
  CHECK(msv_tr(O).value == doctest::Approx(0.0));

  Mat S(2, 2);
  S << 1, 0, 0, 0;
  CHECK(msv_tr(S).value == doctest::Approx(0.5));
}

TEST_CASE("msv_expected hand cases and lrr closed form") {
  int n = 4;
  Mat E = Mat::Identity(n, n) / n;
  CHECK(msv_expected(E).value == doctest::Approx(0.0));
  CHECK(msv_expected(Mat::Zero(n, n)).value == 1.0);

  Mat bad = Mat::Zero(2, 2);
  bad(0, 1) = 1.0;
  CHECK_THROWS_AS(msv_expected(bad), std::invalid_argument);

  // Phi Phi^T = c I: criterion is |1 - n c/(c+lam)^2|
  Rng rng(202);
  double cc = 2.5, lam = 0.9;
  Mat Q = random_orthogonal(n, rng);
  Mat Phi = std::sqrt(cc) * Q;
  auto f = LrrFactor::fit(Phi);
  double got = msv_expected(f.expected_outer(lam)).value;
  CHECK(got == doctest::Approx(std::abs(1.0 - n * cc / ((cc + lam) * (cc + lam)))).epsilon(1e-12));
}

TEST_CASE("msv_norm matches the hand SVD of diag(1,-1)/n") {
  // S_v with S_v^T S_v / n_v = diag(0, 1), n = n_v = 2
  Mat Sv(2, 2);
  Sv << 0.0, std::sqrt(2.0), 0.0, 0.0;
  CHECK(msv_norm(Sv, MatrixNorm::trace).value == doctest::Approx(0.0));
  CHECK(msv_norm(Sv, MatrixNorm::nuclear).value == doctest::Approx(1.0));
  CHECK(msv_norm(Sv, MatrixNorm::frobenius).value == doctest::Approx(std::sqrt(2.0) / 2.0));
  CHECK(msv_norm(Sv, MatrixNorm::spectral).value == doctest::Approx(0.5));

  // exact moment match vanishes under all four norms
  int n = 3, n_v = 6;
  Mat M = Mat::Zero(n_v, n);
  M.topRows(3) = std::sqrt(2.0) * Mat::Identity(3, 3);
  for (auto norm : {MatrixNorm::trace, MatrixNorm::nuclear, MatrixNorm::frobenius,
                    MatrixNorm::spectral})
    CHECK(msv_norm(M, norm).value == doctest::Approx(0.0).epsilon(1e-14));

  // PSD case: trace seminorm equals nuclear norm
  Mat small = 0.1 * Mat::Identity(3, 3);  // A = I/3 - small^T small/3 is PSD
  CHECK(msv_norm(small, MatrixNorm::trace).value ==
        doctest::Approx(msv_norm(small, MatrixNorm::nuclear).value));
}

TEST_CASE("gcv closed forms agree and endpoints are exact") {
  Rng rng(203);
  int n = 7;
  Vec y = random_matrix(n, 1, rng).col(0);
  CHECK(gcv(y, Mat::Zero(n, n)).value == doctest::Approx(y.squaredNorm() / n));

  // projection that reproduces y exactly with trace < n
  Mat P = y * y.transpose() / y.squaredNorm();
  CHECK(gcv(y, P).value == doctest::Approx(0.0).epsilon(1e-14));

  for (int t = 0; t < 10; ++t) {
    Mat S = 0.3 * random_matrix(n, n, rng);
    double direct = gcv(y, S).value;
    double scale = 1.0 - S.trace() / n;
    Vec f = S * y;
    double alt = 0.0;
    for (int i = 0; i < n; ++i) {
      double r = (y(i) - f(i)) / scale;
      alt += r * r;
    }
    alt /= n;
    CHECK(direct == doctest::Approx(alt).epsilon(1e-12));
  }

  CHECK_THROWS_AS(gcv(y, Mat::Identity(n, n)), std::domain_error);
}

TEST_CASE("y-free gcv of the zero smoother hits the three limit values") {
  int n = 9;
  Mat Z = Mat::Zero(n, n);
  CHECK(gcv_yfree(Z, MatrixNorm::nuclear).value == doctest::Approx(1.0 / n));
  CHECK(gcv_yfree(Z, MatrixNorm::frobenius).value ==
        doctest::Approx(1.0 / (n * std::sqrt(static_cast<double>(n)))));
  CHECK(gcv_yfree(Z, MatrixNorm::spectral).value == doctest::Approx(1.0 / (n * n)));
  CHECK_THROWS_AS(gcv_yfree(Mat::Identity(n, n), MatrixNorm::nuclear), std::domain_error);
}

TEST_CASE("in-sample y-free msv endpoints") {
  int n = 6;
  Mat I = Mat::Identity(n, n);
  for (auto mode : {InSampleMode::StS, InSampleMode::S})
    for (auto norm : {MatrixNorm::trace, MatrixNorm::nuclear, MatrixNorm::frobenius,
                      MatrixNorm::spectral})
      CHECK(in_sample_msv_yfree(I, mode, norm).value == doctest::Approx(0.0));

  Mat Z = Mat::Zero(n, n);
  CHECK(in_sample_msv_yfree(Z, InSampleMode::StS, MatrixNorm::nuclear).value ==
        doctest::Approx(1.0));
  CHECK(in_sample_msv_yfree(Z, InSampleMode::StS, MatrixNorm::frobenius).value ==
        doctest::Approx(1.0 / std::sqrt(static_cast<double>(n))));
  CHECK(in_sample_msv_yfree(Z, InSampleMode::StS, MatrixNorm::spectral).value ==
        doctest::Approx(1.0 / n));

  // ridge: nuclear value strictly increasing in lambda on a full-rank instance
  Rng rng(204);
  Mat X = random_matrix(8, 4, rng);
  auto f = LrrFactor::fit(X);
  double prev = -1.0;
  for (double lam : {0.0, 0.1, 1.0, 10.0}) {
    Mat S = f.smoother_rows(X, lam);
    double v = in_sample_msv_yfree(S, InSampleMode::StS, MatrixNorm::nuclear).value;
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("loocv closed form and the constant-diagonal identity") {
  Rng rng(205);
  int n = 5;
  Vec y = random_matrix(n, 1, rng).col(0);
  CHECK(loocv(y, Mat::Zero(n, n)).value == doctest::Approx(y.squaredNorm() / n));

  // constant-diagonal S: loocv == gcv
  Mat S = 0.2 * random_matrix(n, n, rng);
  double target = 0.3;
  for (int i = 0; i < n; ++i) S(i, i) = target;
  CHECK(loocv(y, S).value == doctest::Approx(gcv(y, S).value).epsilon(1e-12));

  Mat interp = Mat::Identity(n, n);
  CHECK_THROWS_AS(loocv(y, interp), std::domain_error);

  // krr diagonal varies, loocv differs from gcv generically
  Mat X = random_matrix(n, 2, rng);
  auto f = KernelFactor::fit(X, 0.7);
  Mat Sk = f.smoother_train(0.5);
  CHECK(loocv(y, Sk).value != doctest::Approx(gcv(y, Sk).value));
}

TEST_CASE("edof equals the trace") {
  CHECK(edof(Mat::Identity(4, 4)) == 4.0);
  CHECK(edof(Mat::Zero(3, 3)) == 0.0);
  Rng rng(206);
  Mat X = random_matrix(9, 4, rng);
  auto f = LrrFactor::fit(X);
  double lam = 0.8;
  double want = 0.0;
  for (int i = 0; i < f.s.size(); ++i) {
    double s2 = f.s(i) * f.s(i);
    want += s2 / (s2 + lam);
  }
  CHECK(edof(f.smoother_rows(X, lam)) == doctest::Approx(want).epsilon(1e-12));
  CHECK_THROWS_AS(edof(Mat::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("trace identity on random quadratic forms") {
  Rng rng(207);
  const int draws = 20000;
  for (int t = 0; t < 3; ++t) {
    int n = 4 + static_cast<int>(rng.uniform_int(4));
    Mat A = random_matrix(n, n, rng);
    double mean = 0.0, m2 = 0.0;
    Rng draw = rng.derive("mc" + std::to_string(t));
    for (int k = 0; k < draws; ++k) {
      Vec y(n);
      for (int i = 0; i < n; ++i) y(i) = draw.normal();
      double q = y.dot(A * y);
      mean += q;
      m2 += q * q;
    }
    mean /= draws;
    m2 /= draws;
    double se = std::sqrt((m2 - mean * mean) / draws);
    CHECK(std::abs(mean - A.trace()) < 4.0 * se);
  }
}

TEST_CASE("averaged msv approximates |Tr(A)| only for sign-definite spectra") {
  Rng rng(208);
  int n = 5, n_v = 8;
  Mat Sv = 0.1 * random_matrix(n_v, n, rng);
  // A = I/n - Sv^T Sv/n_v with small Sv is PSD
  Mat A = Mat::Identity(n, n) / n - Sv.transpose() * Sv / n_v;
  auto eig = sym_eig(A);
  REQUIRE(eig.values.minCoeff() > 0.0);

  const int draws = 40000;
  Rng draw(209);
  double mean_abs = 0.0, mean_signed = 0.0;
  for (int k = 0; k < draws; ++k) {
    Vec y(n);
    for (int i = 0; i < n; ++i) y(i) = draw.normal();
    double q = y.squaredNorm() / n - (Sv * y).squaredNorm() / n_v;
    mean_abs += std::abs(q);
    mean_signed += q;
  }
  mean_abs /= draws;
  mean_signed /= draws;
  // PSD: |q| = q, both estimates near Tr(A)
  CHECK(mean_abs == doctest::Approx(A.trace()).epsilon(0.05));
  CHECK(mean_signed == doctest::Approx(A.trace()).epsilon(0.05));
}
