#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "isac/metrics.hpp"
#include "isac/scenario.hpp"

namespace isac {

/// Three-sigma angle radius 3 sqrt(Tr Q) / d_bar.
double angle_radius(const Mat2& Q, double d_bar);

/// CSI-error radius of g_m:
///   |alpha| beta_nlos / sqrt(1+kappa)
///   + 3 pi |alpha| |sin theta_bar| / d_bar * sqrt(kappa/(1+kappa)) * sqrt(N(N-1)(2N-1)/6) * sqrt(Tr Q).
double csi_radius(Complex alpha, double kappa, double beta_nlos, double theta_bar, double d_bar, int N,
                  const Mat2& Q);

/// Same radius written as b + sqrt(Tr Q) / a. The pair (a, b) turns delta >= radius
/// into Tr Q <= a^2 (delta - b)^2, the form used by the CRB coupling constraint.
/// a is +inf when the angle term vanishes (N = 1, kappa = 0 or sin theta_bar = 0).
struct CrbCoupling {
  double a = 0.0;
  double b = 0.0;
  double radius(double trace_q) const;
  /// Largest Tr Q certified by delta; -1 when delta < b.
  double max_trace(double delta) const;
};

CrbCoupling crb_coupling(Complex alpha, double kappa, double beta_nlos, double theta_bar, double d_bar, int N);

struct UncertaintyModel {
  std::array<Mat2, kStages> Q;
  std::array<std::vector<double>, kStages> beta_theta;  // [stage][m]
  std::array<std::vector<double>, kStages> beta_g;      // [stage][m]
  std::array<double, kStages> beta_g_stacked{};
  std::vector<CrbCoupling> coupling;  // a_m, b_m

  /// Radii in the scenario's physical channel units for stage-1 covariance Q1 and
  /// stage-2 covariance Q2.
  static UncertaintyModel make(const Scenario& sc, const Mat2& Q2);
};

/// delta_0 >= sum delta_m^2 and delta_m >= beta_m for every m (both within tol).
bool delta_consistency(const std::vector<double>& delta, double delta_0, const std::vector<double>& beta,
                       double tol = 0.0);

struct OracleOptions {
  int n_samples = 10000;
  int refine_steps = 50;
  double step_fraction = 0.1;  // ascent step as a fraction of each radius
  std::uint64_t seed = 7;
};

/// Lower bound on max over |dg_m| <= beta_m of the leakage rate log2(1 + ratio) of user
/// (m,k): best of n_samples draws on the radius spheres, refined by projected gradient ascent.
double worst_case_leakage_oracle(const BeamformingSolution& sol, const std::vector<CVector>& g_bar,
                                 const std::vector<double>& beta, double noise_eve, int stage, int m, int k,
                                 const OracleOptions& options = {});

}  // namespace isac
