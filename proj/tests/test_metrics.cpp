#include <cmath>
#include <random>

#include "approx.hpp"
#include "isac/metrics.hpp"

using namespace isac;

namespace {

CMatrix random_psd(int N, std::mt19937_64& rng, double scale, int rank = -1) {
  std::normal_distribution<double> nd;
  if (rank < 0) rank = N;
  CMatrix A(N, rank);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < rank; ++j) A(i, j) = Complex(nd(rng), nd(rng));
  return scale * A * A.adjoint() / double(N * rank);
}

CVector random_vector(int N, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> nd;
  CVector v(N);
  for (int i = 0; i < N; ++i) v(i) = scale * Complex(nd(rng), nd(rng));
  return v;
}

BeamformingSolution random_solution(int M, int N, int K, std::mt19937_64& rng, double scale) {
  BeamformingSolution s = BeamformingSolution::zeros(M, N, K);
  for (int i = 0; i < kStages; ++i)
    for (int m = 0; m < M; ++m) {
      for (int k = 0; k < K; ++k) s.W[i][m][k] = random_psd(N, rng, scale);
      s.R[i][m] = random_psd(N, rng, scale);
    }
  return s;
}

Scenario small_scenario(int M, int N, int K, std::uint64_t seed) {
  SystemConfig c = SystemConfig::full_default();
  c.M = M;
  c.N = N;
  c.K = K;
  c.beta_nlos.assign(M, 0.1);
  c.bs_positions.resize(M);
  c.rng_seed = seed;
  return build_scenario(c);
}

CMatrix psd_sqrt(const CMatrix& A) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(A);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

TEST_CASE("single-link MRT SINR") {
  const Scenario sc = small_scenario(1, 4, 1, 5);
  const CVector& h = sc.channels.h[0][0][0];
  const double P = 0.02;
  BeamformingSolution s = BeamformingSolution::zeros(1, 4, 1);
  s.W[1][0][0] = P * h * h.adjoint() / h.squaredNorm();
  CHECK(sinr_user(s, sc, 1, 0, 0) == approx(P * h.squaredNorm() / sc.noise_user_w).epsilon(1e-12));
  CHECK(sinr_user(BeamformingSolution::zeros(1, 4, 1), sc, 1, 0, 0) == 0.0);
}

TEST_CASE("SINR matches a symbol-level simulation") {
  const int M = 2, N = 2, K = 2;
  const Scenario sc = small_scenario(M, N, K, 8);
  std::mt19937_64 rng(21);
  const BeamformingSolution s = random_solution(M, N, K, rng, 1e-3);
  const int stage = 1;

  std::vector<std::vector<CMatrix>> Wh(M, std::vector<CMatrix>(K));
  std::vector<CMatrix> Rh(M);
  for (int m = 0; m < M; ++m) {
    for (int k = 0; k < K; ++k) Wh[m][k] = psd_sqrt(s.W[stage][m][k]);
    Rh[m] = psd_sqrt(s.R[stage][m]);
  }
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  auto cn = [&](int n) {
    CVector v(n);
    for (int i = 0; i < n; ++i) v(i) = Complex(nd(rng), nd(rng));
    return v;
  };
  const int draws = 100000;
  const int um = 1, uk = 0;
  double sig = 0.0, rest = 0.0;
  for (int d = 0; d < draws; ++d) {
    Complex own = 0.0, other = std::sqrt(sc.noise_user_w) * cn(1)(0);
    for (int m = 0; m < M; ++m) {
      const CVector& h = sc.channels.h[m][um][uk];
      for (int k = 0; k < K; ++k) {
        const Complex y = h.dot(Wh[m][k] * cn(N));
        if (m == um && k == uk)
          own += y;
        else
          other += y;
      }
      other += h.dot(Rh[m] * cn(N));
    }
    sig += std::norm(own);
    rest += std::norm(other);
  }
  const double mc = sig / rest;
  CHECK(std::abs(mc / sinr_user(s, sc, stage, um, uk) - 1.0) < 0.01);
}

TEST_CASE("achievable rate examples") {
  CHECK(achievable_rate_from_sinr({1.0, 1.0}, {0.2, 0.8}) == approx(1.0).epsilon(1e-15));
  CHECK(achievable_rate_from_sinr({3.0, 3.0}, {0.2, 0.8}) == approx(2.0).epsilon(1e-15));
  CHECK(achievable_rate_from_sinr({0.0, 15.0}, {0.2, 0.8}) == approx(3.2).epsilon(1e-15));

  const Scenario sc = small_scenario(2, 3, 2, 3);
  std::mt19937_64 rng(4);
  const BeamformingSolution s = random_solution(2, 3, 2, rng, 1e-3);
  const double direct = 0.2 * std::log2(1 + sinr_user(s, sc, 0, 1, 1)) + 0.8 * std::log2(1 + sinr_user(s, sc, 1, 1, 1));
  CHECK(achievable_rate(s, sc, 1, 1) == approx(direct).epsilon(1e-14));
}

TEST_CASE("leakage rate examples") {
  const int M = 2, N = 3, K = 2;
  std::mt19937_64 rng(9);
  std::vector<CVector> g{random_vector(N, rng, 1e-5), random_vector(N, rng, 1e-5)};
  const double s2 = 1e-13;
  BeamformingSolution s = BeamformingSolution::zeros(M, N, K);
  CHECK(leakage_rate(s, g, s2, 1, 0, 0) == 0.0);

  // g^H W g = sigma_e^2 with R = 0
  const CVector& g0 = g[0];
  s.W[1][0][1] = s2 * g0 * g0.adjoint() / std::pow(g0.squaredNorm(), 2);
  CHECK(leakage_rate(s, g, s2, 1, 0, 1) == approx(1.0).epsilon(1e-12));

  // independent evaluator on a random instance
  const BeamformingSolution r = random_solution(M, N, K, rng, 1e-3);
  for (int i = 0; i < kStages; ++i)
    for (int m = 0; m < M; ++m)
      for (int k = 0; k < K; ++k) {
        Complex num = 0.0, den = s2;
        for (int a = 0; a < N; ++a)
          for (int b = 0; b < N; ++b) {
            num += std::conj(g[m](a)) * r.W[i][m][k](a, b) * g[m](b);
            for (int mm = 0; mm < M; ++mm) den += std::conj(g[mm](a)) * r.R[i][mm](a, b) * g[mm](b);
          }
        CHECK(leakage_rate(r, g, s2, i, m, k) == approx(std::log2(1 + num.real() / den.real())).epsilon(1e-12));
      }
}

TEST_CASE("total power examples and linearity") {
  const std::array<double, kStages> tau{0.2, 0.8};
  BeamformingSolution s = BeamformingSolution::zeros(2, 3, 2);
  CHECK(total_power(s, tau).total == 0.0);
  s.W[1][1][0] = CMatrix::Identity(3, 3) / 3.0;
  const PowerBreakdown p = total_power(s, tau);
  CHECK(p.per_bs[1] == approx(0.8));
  CHECK(p.per_bs[0] == 0.0);
  CHECK(p.total == approx(0.8));

  std::mt19937_64 rng(5);
  const BeamformingSolution a = random_solution(2, 3, 2, rng, 1.0), b = random_solution(2, 3, 2, rng, 1.0);
  BeamformingSolution c = a;
  for (int i = 0; i < kStages; ++i)
    for (int m = 0; m < 2; ++m) {
      for (int k = 0; k < 2; ++k) c.W[i][m][k] = 2.0 * a.W[i][m][k] + 0.5 * b.W[i][m][k];
      c.R[i][m] = 2.0 * a.R[i][m] + 0.5 * b.R[i][m];
    }
  const auto pa = total_power(a, tau), pb = total_power(b, tau), pc = total_power(c, tau);
  CHECK(pc.total == approx(2.0 * pa.total + 0.5 * pb.total).epsilon(1e-13));
  for (int m = 0; m < 2; ++m) CHECK(pc.per_bs[m] == approx(2.0 * pa.per_bs[m] + 0.5 * pb.per_bs[m]));
}

TEST_CASE("PSD increments never lower SINR or leakage") {
  const int M = 2, N = 3, K = 2;
  const Scenario sc = small_scenario(M, N, K, 6);
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const BeamformingSolution s = random_solution(M, N, K, rng, 1e-3);
    const int i = trial % 2, m = trial % M, k = (trial / 2) % K;
    BeamformingSolution t = s;
    t.W[i][m][k] += random_psd(N, rng, 1e-3, 1);
    CHECK(sinr_user(t, sc, i, m, k) >= sinr_user(s, sc, i, m, k) * (1 - 1e-12));
    CHECK(leakage_rate(t, sc.channels.g_bar, sc.noise_eve_w, i, m, k) >=
          leakage_rate(s, sc.channels.g_bar, sc.noise_eve_w, i, m, k) - 1e-12);
  }
}

TEST_CASE("ratios are invariant to a common power scale") {
  const int M = 2, N = 3, K = 2;
  const Scenario sc = small_scenario(M, N, K, 2);
  Scenario scaled = sc;
  const double c = 37.5;
  scaled.noise_user_w *= c;
  std::mt19937_64 rng(13);
  const BeamformingSolution s = random_solution(M, N, K, rng, 1e-3);
  BeamformingSolution t = s;
  for (int i = 0; i < kStages; ++i)
    for (int m = 0; m < M; ++m) {
      for (auto& W : t.W[i][m]) W *= c;
      t.R[i][m] *= c;
    }
  for (int m = 0; m < M; ++m)
    for (int k = 0; k < K; ++k) {
      CHECK(sinr_user(t, scaled, 1, m, k) == approx(sinr_user(s, sc, 1, m, k)).epsilon(1e-12));
      CHECK(leakage_ratio(t, sc.channels.g_bar, c * sc.noise_eve_w, 0, m, k) ==
            approx(leakage_ratio(s, sc.channels.g_bar, sc.noise_eve_w, 0, m, k)).epsilon(1e-12));
    }
}

TEST_CASE("solution validity and rank-one fit") {
  std::mt19937_64 rng(14);
  BeamformingSolution s = BeamformingSolution::zeros(1, 3, 1);
  const CVector w = random_vector(3, rng, 1.0);
  s.W[1][0][0] = w * w.adjoint();
  CHECK(is_valid_solution(s));
  std::array<std::vector<std::vector<CVector>>, kStages> ws;
  ws[0] = {{CVector::Zero(3)}};
  ws[1] = {{w * Complex(0.0, 1.0)}};  // global phase is irrelevant
  s.w = ws;
  CHECK(is_valid_solution(s));
  (*s.w)[1][0][0] *= 1.1;
  CHECK_FALSE(is_valid_solution(s));
  s.w.reset();
  s.R[0][0] = -CMatrix::Identity(3, 3);
  CHECK_FALSE(is_valid_solution(s));
}

TEST_CASE("solution json round trip") {
  std::mt19937_64 rng(15);
  BeamformingSolution s = random_solution(2, 3, 2, rng, 1e-3);
  std::array<std::vector<std::vector<CVector>>, kStages> ws;
  for (int i = 0; i < kStages; ++i) ws[i].assign(2, std::vector<CVector>(2, random_vector(3, rng, 1.0)));
  s.w = ws;
  const BeamformingSolution b = solution_from_json(solution_to_json(s));
  REQUIRE(b.M() == 2);
  REQUIRE(b.K() == 2);
  REQUIRE(b.N() == 3);
  for (int i = 0; i < kStages; ++i)
    for (int m = 0; m < 2; ++m) {
      CHECK(b.R[i][m] == s.R[i][m]);
      for (int k = 0; k < 2; ++k) {
        CHECK(b.W[i][m][k] == s.W[i][m][k]);
        CHECK((*b.w)[i][m][k] == (*s.w)[i][m][k]);
      }
    }
  CHECK(solution_to_json(b) == solution_to_json(s));
  CHECK_THROWS_AS(solution_from_json("{\"M\": 1}"), InvalidArgument);
}
