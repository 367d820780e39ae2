#pragma once

#include <string>
#include <vector>

#include "isac/central_opt.hpp"
#include "isac/decentral_opt.hpp"

namespace isac {

enum class BaselineScheme { separated_two_stage, fixed_sensing };

struct BaselineConfig {
  BaselineScheme scheme = BaselineScheme::separated_two_stage;
  double fixed_mse_target = 0.0;      // m^2, fixed_sensing only
  double stage1_power_fraction = 1.0;  // stage-1 per-BS power cap / P_max, separated_two_stage only

  /// Throws ConfigError when fixed_sensing has a non-positive target.
  void validate() const;
};

struct Baseline1Options {
  double stage1_power_fraction = 1.0;
  double power_unit = 1e-3;
  bool recover = true;
  conic::SolverOptions solver;
};

struct Baseline1Result {
  BeamformingSolution solution;  // watts
  double trace_q = 0.0;          // Tr Q_central of the stage-1 FIM, m^2
  std::vector<double> delta;     // stage-2 radii, normalized units
  RecoveryReport recovery;
  std::string status = "converged";
};

/// Sensing first: stage 1 minimizes Tr Q_central under the per-BS stage-1 power cap with
/// the stage-1 SINR and leakage held at the full targets; stage 2 then minimizes its power
/// with stage 1 frozen, the remaining rate and leakage budgets and the radii implied by
/// the stage-1 FIM. Throws Infeasible when either stage is infeasible.
Baseline1Result run_baseline1(const Scenario& sc, const Baseline1Options& opt = {});

/// Decentralized design with the stage-2 radii fixed by mse_target and Tr Q_fused <= mse_target.
/// Throws InvalidArgument for a non-positive target and Infeasible when it is unreachable.
DecentralResult run_baseline2(const Scenario& sc, double mse_target, DecentralOptions opt = {});

/// Log-spaced targets from lo * center to hi * center.
std::vector<double> mse_grid(double center, int points = 12, double lo = 0.1, double hi = 10.0);

}  // namespace isac
