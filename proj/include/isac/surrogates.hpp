#pragma once

#include <array>
#include <vector>

#include "isac/model.hpp"

namespace isac {

/// First-order upper bound on Y = log2 Z of user (m,k) in `stage` around an
/// expansion point. Z is affine in the covariances, so
///   Y_bar(X) = log2 Z0 + sum Re Tr(grad_W (W - W0)) + sum Re Tr(grad_R (R - R0)).
struct RateSurrogate {
  int stage = 0, m = 0, k = 0;
  double Z0 = 0.0;
  BeamformingSolution expansion;
  std::vector<std::vector<CMatrix>> grad_W;  // [m_bar][k_bar]
  std::vector<CMatrix> grad_R;               // [m_bar]

  double evaluate(const BeamformingSolution& X) const;
};

/// Throws InvalidExpansionPoint when Z <= 0 at the expansion point.
RateSurrogate rate_surrogate(const BeamformingSolution& expansion, const NormalizedModel& mdl, int stage, int m,
                             int k);

/// Tangent-line overestimator of sum_i tau_i log2(1 + xi_i) at xi_prev.
struct LeakageSurrogate {
  std::array<double, kStages> xi0{};
  std::array<double, kStages> tau{};

  double slope(int stage) const;
  double evaluate(const std::array<double, kStages>& xi) const;
  /// Exact sum_i tau_i log2(1 + xi_i).
  double exact(const std::array<double, kStages>& xi) const;
};

LeakageSurrogate leakage_surrogate(const std::array<double, kStages>& xi_prev, const std::array<double, kStages>& tau);

/// Inner approximation of Tr(F^-1) <= a^2 (delta - b)^2 linearized at delta_prev:
///   Tr(F^-1) <= a^2 (d0 - b)^2 + 2 a^2 (d0 - b)(delta - d0).
struct CrbCouplingSurrogate {
  double a = 0.0, b = 0.0, delta0 = 0.0;

  double rhs(double delta) const;
  /// Surrogate value Tr(F^-1) - rhs(delta); <= 0 means satisfied.
  double value(double trace_finv, double delta) const;
  /// Original DC constraint value Tr(F^-1) - a^2 (delta - b)^2.
  double exact(double trace_finv, double delta) const;
};

/// Throws InvalidExpansionPoint when delta_prev <= b.
CrbCouplingSurrogate crb_coupling_constraint(double delta_prev, const CrbCoupling& coupling);

/// Numeric S-procedure matrix
///   [eta I, 0; 0, -eta r2 + xi s2] - B^H (W_bar - xi R_bar) B,  B = [I, g_bar].
/// r2 is the squared radius (stage 1) or delta_0 (stage 2).
CMatrix s_procedure_matrix(const CMatrix& W_bar, const CMatrix& R_bar, double xi, double eta, const CVector& g_bar,
                           double r2, double noise);

/// Block-diagonal embedding of W_mk at block m of an MN x MN matrix.
CMatrix embed_block(const CMatrix& W, int m, int M);

}  // namespace isac
