#pragma once

#include <optional>
#include <vector>

#include "isac/metrics.hpp"
#include "isac/scenario.hpp"
#include "isac/uncertainty.hpp"

namespace isac {

struct AuditOptions {
  double rate_tol = 1e-3;        // bits/s/Hz
  double leak_tol = 1e-3;        // bits/s/Hz
  double power_rel_tol = 1e-6;
  bool use_vectors = false;      // evaluate the recovered beamformers instead of covariances
  OracleOptions oracle;
  /// Per-BS stage-2 CSI radii (physical units); default uses the centralized FIM of the solution.
  std::optional<std::vector<double>> stage2_radii;
};

struct AuditReport {
  bool power_ok = true, rate_ok = true, leak_ok = true;
  double max_power_ratio = 0.0;    // max_m P_m / P_max
  double min_rate_margin = 0.0;    // min_(m,k) rate - R_info
  double max_leak_excess = 0.0;    // max_(m,k) worst leakage - R_leak
  std::vector<std::vector<double>> rate;  // [m][k]
  std::vector<std::vector<double>> leak;  // [m][k], sum_i tau_i worst-case leakage
  std::array<std::vector<double>, kStages> radii;

  bool passed() const { return power_ok && rate_ok && leak_ok; }
};

/// Replaces every W by w w^H (sol.w must be set).
BeamformingSolution covariances_from_vectors(const BeamformingSolution& sol);

/// Checks C1, C2 and the sampled C3 on a solution in watts.
AuditReport audit_solution(const BeamformingSolution& sol, const Scenario& sc, const AuditOptions& opt = {});

/// Stage-2 radii from the centralized FIM of sol; +inf when singular.
std::vector<double> central_stage2_radii(const BeamformingSolution& sol, const Scenario& sc);

}  // namespace isac
