#include "isac/uncertainty.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace isac {

namespace {

double array_factor(int N) { return std::sqrt(N * (N - 1.0) * (2.0 * N - 1.0) / 6.0); }

// Coefficient c of sqrt(Tr Q) in the CSI radius.
double angle_coefficient(Complex alpha, double kappa, double theta_bar, double d_bar, int N) {
  return 3.0 * std::numbers::pi * std::abs(alpha) * std::abs(std::sin(theta_bar)) / d_bar *
         std::sqrt(kappa / (1.0 + kappa)) * array_factor(N);
}

}  // namespace

double angle_radius(const Mat2& Q, double d_bar) {
  if (!(d_bar > 0.0)) throw InvalidGeometry("angle_radius: d_bar must be positive");
  return 3.0 * std::sqrt(std::max(Q.trace(), 0.0)) / d_bar;
}

double csi_radius(Complex alpha, double kappa, double beta_nlos, double theta_bar, double d_bar, int N,
                  const Mat2& Q) {
  if (kappa < 0.0 || N < 1) throw InvalidArgument("csi_radius: need kappa >= 0 and N >= 1");
  const double nlos = std::abs(alpha) * beta_nlos * std::sqrt(1.0 / (1.0 + kappa));
  return nlos + angle_coefficient(alpha, kappa, theta_bar, d_bar, N) * std::sqrt(std::max(Q.trace(), 0.0));
}

double CrbCoupling::radius(double trace_q) const {
  if (std::isinf(a)) return b;
  return b + std::sqrt(std::max(trace_q, 0.0)) / a;
}

double CrbCoupling::max_trace(double delta) const {
  if (delta < b) return -1.0;
  if (std::isinf(a)) return std::numeric_limits<double>::infinity();
  return a * a * (delta - b) * (delta - b);
}

CrbCoupling crb_coupling(Complex alpha, double kappa, double beta_nlos, double theta_bar, double d_bar, int N) {
  CrbCoupling c;
  c.b = std::abs(alpha) * beta_nlos * std::sqrt(1.0 / (1.0 + kappa));
  const double coef = angle_coefficient(alpha, kappa, theta_bar, d_bar, N);
  c.a = coef > 0.0 ? 1.0 / coef : std::numeric_limits<double>::infinity();
  return c;
}

UncertaintyModel UncertaintyModel::make(const Scenario& sc, const Mat2& Q2) {
  UncertaintyModel u;
  u.Q = {sc.config.Q1, Q2};
  const int M = sc.M();
  for (int m = 0; m < M; ++m) {
    u.coupling.push_back(crb_coupling(sc.channels.alpha[m], sc.config.rician_kappa, sc.config.beta_nlos[m],
                                      sc.geometry.theta_bar[m], sc.geometry.d_bar[m], sc.N()));
  }
  for (int i = 0; i < kStages; ++i) {
    double sq = 0.0;
    for (int m = 0; m < M; ++m) {
      u.beta_theta[i].push_back(angle_radius(u.Q[i], sc.geometry.d_bar[m]));
      const double b = csi_radius(sc.channels.alpha[m], sc.config.rician_kappa, sc.config.beta_nlos[m],
                                  sc.geometry.theta_bar[m], sc.geometry.d_bar[m], sc.N(), u.Q[i]);
      u.beta_g[i].push_back(b);
      sq += b * b;
    }
    u.beta_g_stacked[i] = std::sqrt(sq);
  }
  return u;
}

bool delta_consistency(const std::vector<double>& delta, double delta_0, const std::vector<double>& beta,
                       double tol) {
  if (delta.size() != beta.size()) throw InvalidArgument("delta_consistency: size mismatch");
  double sq = 0.0;
  for (size_t m = 0; m < delta.size(); ++m) {
    if (delta[m] < beta[m] - tol) return false;
    sq += delta[m] * delta[m];
  }
  return delta_0 >= sq - tol;
}

double worst_case_leakage_oracle(const BeamformingSolution& sol, const std::vector<CVector>& g_bar,
                                 const std::vector<double>& beta, double noise_eve, int stage, int m, int k,
                                 const OracleOptions& opt) {
  const int M = static_cast<int>(g_bar.size());
  if (static_cast<int>(beta.size()) != M) throw InvalidArgument("oracle: beta must have one radius per BS");
  for (double b : beta)
    if (b < 0.0) throw InvalidArgument("oracle: radii must be >= 0");
  const int N = static_cast<int>(g_bar[0].size());
  const CMatrix& W = sol.W[stage][m][k];
  const auto& R = sol.R[stage];

  auto ratio = [&](const std::vector<CVector>& g) {
    double denom = noise_eve;
    for (int s = 0; s < M; ++s) denom += (g[s].adjoint() * R[s] * g[s])(0, 0).real();
    return std::max((g[m].adjoint() * W * g[m])(0, 0).real(), 0.0) / denom;
  };

  std::vector<CVector> g = g_bar;
  double best = ratio(g);
  std::vector<CVector> best_g = g;
  bool any_radius = false;
  for (double b : beta) any_radius |= b > 0.0;
  if (!any_radius) return std::log2(1.0 + best);

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int s = 0; s < opt.n_samples; ++s) {
    for (int b = 0; b < M; ++b) {
      CVector d(N);
      for (int n = 0; n < N; ++n) d(n) = Complex(normal(rng), normal(rng));
      const double nd = d.norm();
      g[b] = g_bar[b];
      if (nd > 0.0) g[b] += d * (beta[b] / nd);
    }
    const double r = ratio(g);
    if (r > best) {
      best = r;
      best_g = g;
    }
  }

  // Projected gradient ascent on the ratio from the best draw.
  g = best_g;
  for (int it = 0; it < opt.refine_steps; ++it) {
    double denom = noise_eve;
    for (int s = 0; s < M; ++s) denom += (g[s].adjoint() * R[s] * g[s])(0, 0).real();
    const double num = (g[m].adjoint() * W * g[m])(0, 0).real();
    for (int b = 0; b < M; ++b) {
      if (beta[b] == 0.0) continue;
      CVector grad = -num * (R[b] * g[b]);
      if (b == m) grad += denom * (W * g[m]);
      const double gn = grad.norm();
      if (gn == 0.0) continue;
      CVector delta = g[b] - g_bar[b] + grad * (opt.step_fraction * beta[b] / gn);
      const double dn = delta.norm();
      if (dn > beta[b]) delta *= beta[b] / dn;
      g[b] = g_bar[b] + delta;
    }
    const double r = ratio(g);
    if (r > best) best = r;
  }
  return std::log2(1.0 + best);
}

}  // namespace isac
