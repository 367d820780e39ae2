#pragma once

#include <array>
#include <optional>
#include <random>
#include <vector>

#include "isac/metrics.hpp"
#include "isac/scenario.hpp"

namespace isac {

enum class FisherKind { centralized, per_bs, transmitter, fused };

/// 2x2 Fisher information for the eavesdropper position and, when F is
/// invertible, the CRB Q = F^{-1}.
struct FisherBlock {
  Mat2 F = Mat2::Zero();
  std::optional<Mat2> Q;
  FisherKind kind = FisherKind::centralized;
  int bs = -1;

  static FisherBlock from_information(const Mat2& F, FisherKind kind, int bs = -1);
  bool singular() const { return !Q.has_value(); }
  /// Tr Q, or +inf for a singular F.
  double trace_crb() const;
};

/// Target response matrices G[tx][rx] = alpha a(theta_rx) a(theta_tx)^H and their
/// derivatives with respect to the Cartesian target position.
struct ResponseDerivatives {
  std::vector<std::vector<CMatrix>> G;                   // [tx][rx]
  std::vector<std::vector<std::array<CMatrix, 2>>> dG;   // [tx][rx][j]
};

/// Response matrices at position p; the gains alpha are held fixed in p.
ResponseDerivatives response_and_derivatives(const std::vector<Vec2>& bs_positions,
                                             const std::vector<std::vector<Complex>>& alpha_mm, const Vec2& p,
                                             int N);

/// Linear map from the stage-1 transmit covariances to the FIM:
///   F_ij = sum_m Re Tr(coef[m][ij] S_m),  ij in {00, 01, 11}.
/// Each coef is Hermitian and already includes the 2L / sigma_s^2 factor.
struct FimOperator {
  std::vector<std::array<CMatrix, 3>> coef;  // [tx]

  Mat2 apply(const std::vector<CMatrix>& S) const;
};

/// Restricts the sum to the listed transmitters and receivers (empty = all).
FimOperator fim_operator(const Scenario& sc, const std::vector<int>& transmitters, const std::vector<int>& receivers,
                         double power_scale = 1.0);

/// All echoes pooled at the controller.
FisherBlock centralized_fim(const BeamformingSolution& sol, const Scenario& sc);
/// Echoes received at BS m from every transmitter.
FisherBlock local_fim(const BeamformingSolution& sol, const Scenario& sc, int m);
/// Contribution of transmitter m to every receiver (sum_m F_bar_m = sum_m F_m).
Mat2 transmitter_fim(const BeamformingSolution& sol, const Scenario& sc, int m);

struct FusionResult {
  Vec2 p_fused;
  Mat2 Q_fused;
  std::vector<Mat2> weights;  // A_m
};

/// Minimum-MSE linear fusion: A_m = (sum Q^-1)^-1 Q_m^-1, Q_fused = (sum Q^-1)^-1.
FusionResult fuse_estimates(const std::vector<Vec2>& p_hat, const std::vector<Mat2>& Q);

enum class SensingMode { centralized, decentralized };

struct EstimationDraw {
  Vec2 p_hat;
  Mat2 Q_used;
};

/// Unbiased position estimate distributed as N(p_true, Q) with Q the centralized
/// CRB or the fused covariance. Throws SingularCovariance when F is singular.
EstimationDraw simulate_estimation(const Scenario& sc, const BeamformingSolution& sol, SensingMode mode,
                                   std::mt19937_64& rng);

}  // namespace isac
