#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "isac/audit.hpp"
#include "isac/conic/solver.hpp"
#include "isac/model.hpp"

namespace isac {

/// Per-user auxiliaries of the S-procedure: xi (leakage SNR bound) and eta (multiplier), [stage][m][k].
struct Auxiliaries {
  std::array<std::vector<std::vector<double>>, kStages> xi;
  std::array<std::vector<std::vector<double>>, kStages> eta;

  static Auxiliaries filled(int M, int K, double xi, double eta);
};

struct CentralOptions {
  double eps1 = 1e-3;
  int max_iter = 30;
  double power_unit = 1e-3;  // watts per optimizer unit
  /// Initialization targets are tightened by these fractions so that the first
  /// block-1 problem starts strictly inside its feasible set.
  double init_rate_margin = 1e-3;
  double init_leak_margin = 1e-2;
  int max_fallbacks = 3;
  double fallback_power_step = 0.01;
  bool recover = true;
  /// Fixed-sensing design: stage-2 radii come from this MSE (m^2) and Tr Q <= it.
  std::optional<double> fixed_mse;
  conic::SolverOptions solver;
  std::ostream* trace = nullptr;  // JSON lines, one per iteration
};

/// Algorithm 1 state in optimizer units.
struct BcdState {
  BeamformingSolution X;
  double delta0 = 0.0;
  std::vector<double> delta;
  Auxiliaries aux;
  std::vector<double> objective_history;  // watts; entry 0 is the initialization
  int iterations = 0;
  bool converged = false;
  int fallbacks = 0;
  std::string status = "running";
};

struct BlockReport {
  bool ok = false;
  conic::SolveStatus status = conic::SolveStatus::numerical_error;
  std::string failed_tag;
  double max_violation = 0.0;
  int newton_steps = 0;
};

/// Feasible starting point: one convex program with fixed xi = 2^R_leak - 1, fixed
/// delta_m = scale * beta_m^(1) and linear SINR targets 2^R_info - 1 in both stages.
/// Tries the scales {1, 2, 0.5, 4, 0.25}; throws Infeasible when all fail.
BcdState initialize_central(const NormalizedModel& mdl, const CentralOptions& opt = {});

/// Minimizes total power over (W, R, delta_0, delta_m) at fixed (xi, eta); C1 uses
/// power_fraction * P_max. Leaves the state untouched on failure.
BlockReport solve_block1(BcdState& st, const NormalizedModel& mdl, const CentralOptions& opt = {},
                         double power_fraction = 1.0);

/// Minimizes the linearized leakage over (xi, eta) at fixed (W, R, delta_0), one small
/// program per user. Leaves the state untouched on failure.
BlockReport solve_block2(BcdState& st, const NormalizedModel& mdl, const CentralOptions& opt = {});

double state_power_watts(const BcdState& st, const NormalizedModel& mdl);

/// Audit used while screening randomized candidates (smaller oracle budget).
inline AuditOptions screening_audit() {
  AuditOptions a;
  a.oracle.n_samples = 500;
  a.oracle.refine_steps = 20;
  return a;
}

struct RecoveryOptions {
  double principal_threshold = 0.999;
  int draws = 200;
  std::uint64_t seed = 17;
  AuditOptions audit = screening_audit();
};

struct RecoveryReport {
  double min_eigen_ratio = 1.0;
  int randomized = 0;          // covariances that needed randomization
  bool feasible = true;        // audited C2/C3 on the recovered vectors
  double power_before = 0.0;   // watts
  double power_after = 0.0;    // watts
};

/// lambda_max / Tr of a Hermitian PSD matrix (1 for the zero matrix).
double eigen_ratio(const CMatrix& W);

/// Principal eigenvector scaled to sqrt(lambda_1).
CVector principal_beamformer(const CMatrix& W);

/// Fills sol.w (watts). Rank-one covariances give their principal vector; others use
/// Gaussian randomization scaled to keep the own-user signal power, choosing the
/// minimum-power candidate that passes the C2/C3 audit.
RecoveryReport recover_rank_one(BeamformingSolution& sol, const Scenario& sc, const RecoveryOptions& opt = {});

struct CentralResult {
  BcdState state;
  BeamformingSolution solution;  // watts
  RecoveryReport recovery;
};

CentralResult run_algorithm1(const Scenario& sc, const CentralOptions& opt = {});

}  // namespace isac
