#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "isac/scenario.hpp"

namespace isac {

/// SDR-lifted transmit design. Stage index is 0-based (0: sensing + communication,
/// 1: secure communication). All covariances in watts.
struct BeamformingSolution {
  // W[stage][m][k], R[stage][m]
  std::array<std::vector<std::vector<CMatrix>>, kStages> W;
  std::array<std::vector<CMatrix>, kStages> R;
  // Recovered rank-one beamformers w[stage][m][k], when available.
  std::optional<std::array<std::vector<std::vector<CVector>>, kStages>> w;

  static BeamformingSolution zeros(int M, int N, int K);

  int M() const { return static_cast<int>(R[0].size()); }
  int K() const { return W[0].empty() ? 0 : static_cast<int>(W[0][0].size()); }
  int N() const { return R[0].empty() ? 0 : static_cast<int>(R[0][0].rows()); }

  /// S_m = sum_k W_mk + R_m for the given stage.
  CMatrix transmit_covariance(int stage, int m) const;
};

inline constexpr double kRankOneTolerance = 1e-3;

/// Checks Hermitian/PSD structure and, when w is present, the rank-one fit
/// |w w^H - W|_F / |W|_F <= tol.
bool is_valid_solution(const BeamformingSolution& sol, double tol = kRankOneTolerance);

/// SINR of user (m,k) in `stage`, evaluated on covariances.
double sinr_user(const BeamformingSolution& sol, const Scenario& sc, int stage, int m, int k);

/// SINR of user (m,k) evaluated on the recovered vectors (sol.w must be set).
double sinr_user_vectors(const BeamformingSolution& sol, const Scenario& sc, int stage, int m, int k);

/// sum_i tau_i log2(1 + gamma_i).
double achievable_rate(const BeamformingSolution& sol, const Scenario& sc, int m, int k);
double achievable_rate_from_sinr(const std::array<double, kStages>& sinr, const std::array<double, kStages>& tau);

/// Eavesdropper ratio g_m^H W_mk g_m / (sum_m' g_m'^H R_m' g_m' + sigma_e^2).
double leakage_ratio(const BeamformingSolution& sol, const std::vector<CVector>& g, double noise_eve, int stage,
                     int m, int k);
/// log2(1 + leakage_ratio).
double leakage_rate(const BeamformingSolution& sol, const std::vector<CVector>& g, double noise_eve, int stage,
                    int m, int k);

struct PowerBreakdown {
  double total = 0.0;
  std::vector<double> per_bs;
};

/// P_m = sum_i tau_i (sum_k Tr W + Tr R).
PowerBreakdown total_power(const BeamformingSolution& sol, const std::array<double, kStages>& tau);
inline PowerBreakdown total_power(const BeamformingSolution& sol, const Scenario& sc) {
  return total_power(sol, sc.config.tau);
}

/// JSON with full double precision; parsing returns an identical solution.
std::string solution_to_json(const BeamformingSolution& sol);
BeamformingSolution solution_from_json(const std::string& text);

}  // namespace isac
