#include <cmath>
#include <numbers>
#include <random>

#include "approx.hpp"
#include "isac/uncertainty.hpp"

using namespace isac;

namespace {

double radius_formula(Complex alpha, double kappa, double beta, double theta, double d, int N, double trQ) {
  const double a = std::abs(alpha);
  const double series = N * (N - 1.0) * (2.0 * N - 1.0) / 6.0;
  return a * beta * std::sqrt(1.0 / (1.0 + kappa)) + 3.0 * std::numbers::pi * a * std::abs(std::sin(theta)) / d *
                                                         std::sqrt(kappa / (1.0 + kappa)) * std::sqrt(series) *
                                                         std::sqrt(trQ);
}

CVector random_vector(int N, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> nd;
  CVector v(N);
  for (int i = 0; i < N; ++i) v(i) = scale * Complex(nd(rng), nd(rng));
  return v;
}

}  // namespace

TEST_CASE("angle radius examples") {
  CHECK(angle_radius(Mat2::Zero(), 5.0) == 0.0);
  CHECK(angle_radius(Mat2::Identity() * 2.0, 6.0) == approx(1.0).epsilon(1e-15));
  const double d1 = std::hypot(15.0, 22.5);
  CHECK(d1 == approx(27.04).epsilon(1e-3));
  CHECK(angle_radius(Mat2::Identity() * 0.25, d1) == approx(0.07845).epsilon(2e-4));
  CHECK_THROWS_AS(angle_radius(Mat2::Identity(), 0.0), InvalidGeometry);
}

TEST_CASE("angle radius scales with the deviation") {
  Mat2 Q;
  Q << 0.7, 0.2, 0.2, 0.4;
  for (double c : {0.0, 0.5, 2.0, 7.0})
    CHECK(angle_radius(c * c * Q, 13.0) == approx(c * angle_radius(Q, 13.0)).epsilon(1e-14));
}

TEST_CASE("csi radius examples") {
  const Complex alpha(3e-3, -4e-3);  // |alpha| = 5e-3
  const double th = 0.9, d = 20.0;
  CHECK(csi_radius(alpha, 10.0, 0.2, th, d, 4, Mat2::Zero()) ==
        approx(5e-3 * 0.2 / std::sqrt(11.0)).epsilon(1e-14));
  CHECK(csi_radius(alpha, 10.0, 0.2, th, d, 1, Mat2::Identity()) ==
        approx(5e-3 * 0.2 / std::sqrt(11.0)).epsilon(1e-14));
  CHECK(csi_radius(alpha, 0.0, 0.2, th, d, 4, Mat2::Identity()) == approx(5e-3 * 0.2).epsilon(1e-14));
  const Mat2 Q = Mat2::Identity() * 0.3;
  CHECK(csi_radius(alpha, 10.0, 0.2, th, d, 4, Q) ==
        approx(radius_formula(alpha, 10.0, 0.2, th, d, 4, 0.6)).epsilon(1e-14));
}

TEST_CASE("csi radius is monotone in Tr Q, nlos bound and N") {
  const Complex alpha(1e-3, 2e-3);
  double prev = 0.0;
  for (double t : {0.0, 0.01, 0.1, 1.0, 5.0}) {
    const double r = csi_radius(alpha, 5.0, 0.1, 1.1, 30.0, 3, Mat2::Identity() * t);
    CHECK(r >= prev);
    prev = r;
  }
  prev = 0.0;
  for (double b : {0.0, 0.05, 0.1, 0.5}) {
    const double r = csi_radius(alpha, 5.0, b, 1.1, 30.0, 3, Mat2::Identity() * 0.2);
    CHECK(r >= prev);
    prev = r;
  }
  prev = 0.0;
  for (int N = 1; N <= 8; ++N) {
    const double r = csi_radius(alpha, 5.0, 0.1, 1.1, 30.0, N, Mat2::Identity() * 0.2);
    CHECK(r >= prev);
    prev = r;
  }
}

TEST_CASE("coupling form reproduces the radius") {
  const Complex alpha(1e-3, 2e-3);
  const CrbCoupling c = crb_coupling(alpha, 5.0, 0.1, 1.1, 30.0, 3);
  for (double t : {0.0, 0.02, 0.3, 2.0}) {
    const double r = csi_radius(alpha, 5.0, 0.1, 1.1, 30.0, 3, Mat2::Identity() * (t / 2));
    CHECK(c.radius(t) == approx(r).epsilon(1e-13));
    CHECK(c.max_trace(r) == approx(t).epsilon(1e-9).scale(1e-12));
  }
  CHECK(c.max_trace(c.b * 0.5) == -1.0);

  const CrbCoupling flat = crb_coupling(alpha, 5.0, 0.1, 0.0, 30.0, 3);
  CHECK(std::isinf(flat.a));
  CHECK(flat.radius(10.0) == approx(flat.b));
}

TEST_CASE("uncertainty model of a scenario") {
  const Scenario sc = build_scenario(SystemConfig::full_default());
  Mat2 Q2;
  Q2 << 0.05, 0.01, 0.01, 0.03;
  const UncertaintyModel u = UncertaintyModel::make(sc, Q2);
  for (int i = 0; i < kStages; ++i) {
    double sq = 0.0;
    for (int m = 0; m < sc.M(); ++m) {
      CHECK(u.beta_g[i][m] >= 0.0);
      CHECK(u.beta_theta[i][m] == approx(3.0 * std::sqrt(u.Q[i].trace()) / sc.geometry.d_bar[m]));
      sq += u.beta_g[i][m] * u.beta_g[i][m];
    }
    CHECK(u.beta_g_stacked[i] * u.beta_g_stacked[i] == approx(sq).epsilon(1e-14));
  }
  // smaller covariance in stage 2 gives smaller radii
  for (int m = 0; m < sc.M(); ++m) CHECK(u.beta_g[1][m] <= u.beta_g[0][m]);
}

TEST_CASE("delta consistency examples") {
  CHECK(delta_consistency({1, 1, 1}, 3.0, {0.5, 0.5, 0.5}));
  CHECK_FALSE(delta_consistency({1, 1, 1}, 2.9, {0.5, 0.5, 0.5}));
  CHECK_FALSE(delta_consistency({1, 0.4, 1}, 3.0, {0.5, 0.5, 0.5}));
  CHECK(delta_consistency({1, 0.4, 1}, 3.0, {0.5, 0.5, 0.5}, 0.2));
}

TEST_CASE("oracle with zero radius is the nominal leakage") {
  std::mt19937_64 rng(2);
  const int M = 2, N = 3, K = 1;
  BeamformingSolution s = BeamformingSolution::zeros(M, N, K);
  const CVector w = random_vector(N, rng, 1e-2);
  s.W[1][0][0] = w * w.adjoint();
  s.R[1][1] = CMatrix::Identity(N, N) * 1e-4;
  const std::vector<CVector> g{random_vector(N, rng, 1e-5), random_vector(N, rng, 1e-5)};
  CHECK(worst_case_leakage_oracle(s, g, {0.0, 0.0}, 1e-13, 1, 0, 0) == leakage_rate(s, g, 1e-13, 1, 0, 0));
}

TEST_CASE("oracle approaches the analytic worst case of a rank-one beam") {
  // R = 0, W = w w^H: max over |dg| <= beta of |w^H (g + dg)|^2 = (|w^H g| + beta |w|)^2
  std::mt19937_64 rng(3);
  const int N = 4;
  const CVector w = random_vector(N, rng, 1e-2);
  BeamformingSolution s = BeamformingSolution::zeros(1, N, 1);
  s.W[1][0][0] = w * w.adjoint();
  const std::vector<CVector> g{random_vector(N, rng, 1e-5)};
  const double beta = 4e-6, s2 = 1e-13;
  const double exact = std::log2(1.0 + std::pow(std::abs(w.dot(g[0])) + beta * w.norm(), 2) / s2);
  const double nominal = leakage_rate(s, g, s2, 1, 0, 0);
  const double o = worst_case_leakage_oracle(s, g, {beta}, s2, 1, 0, 0);
  CHECK(o >= nominal);
  CHECK(o <= exact + 1e-12);
  CHECK(o >= exact - 1e-3);
}

TEST_CASE("oracle is monotone in the sample budget") {
  std::mt19937_64 rng(4);
  const int M = 2, N = 3, K = 1;
  BeamformingSolution s = BeamformingSolution::zeros(M, N, K);
  const CVector w = random_vector(N, rng, 1e-2);
  s.W[0][1][0] = w * w.adjoint();
  s.R[0][0] = CMatrix::Identity(N, N) * 1e-4;
  s.R[0][1] = CMatrix::Identity(N, N) * 2e-4;
  const std::vector<CVector> g{random_vector(N, rng, 1e-5), random_vector(N, rng, 1e-5)};
  OracleOptions o;
  o.refine_steps = 0;
  double prev = 0.0;
  for (int n : {10, 100, 1000, 10000}) {
    o.n_samples = n;
    const double v = worst_case_leakage_oracle(s, g, {3e-6, 5e-6}, 1e-13, 0, 1, 0, o);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK_THROWS_AS(worst_case_leakage_oracle(s, g, {-1.0, 0.0}, 1e-13, 0, 1, 0), InvalidArgument);
}
