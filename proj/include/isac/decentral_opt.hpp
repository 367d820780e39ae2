#pragma once

#include <array>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "isac/central_opt.hpp"
#include "isac/model.hpp"

namespace isac {

/// Consensus families: interference from information beams (e), from sensing
/// beams (t), certified sensing floor at the eavesdropper (u), and the FIM shares (V).
enum class Family { e, t, u, V };

/// Linear maps from the global stack to each BS's local copy.
///
/// Global e (and t) stack per stage: lexicographic (source, victim, user) over source != victim.
/// Local e_m: K aggregate rows sum_{m' != m} e_{m',m,k}, then own rows e_{m,m'',k} for each
/// m'' != m in increasing order. u_m = [sum_{m' != m} u_m', u_m]. Each V block is a real
/// symmetric 2x2 stored as (00, 01, 11); V_hat_m = [sum_{m' != m} V_m'; V_m].
struct SelectionMaps {
  int M = 0, K = 0;
  std::vector<RMatrix> E;  // (MK) x (M(M-1)K)
  std::vector<RMatrix> T;
  std::vector<RMatrix> U;  // 2 x M
  std::vector<RMatrix> V;  // 6 x 3M
  RMatrix E_normal_inv, T_normal_inv, U_normal_inv, V_normal_inv;

  /// Throws InvalidArgument for M < 2 (no consensus terms).
  static SelectionMaps build(int M, int K);

  int global_index(int source, int victim, int k) const;
  const RMatrix& map(Family f, int m) const;
  const RMatrix& normal_inv(Family f) const;
};

/// Scalars exchanged per BS: [e^(1), e^(2), t^(1), t^(2), u^(1), u^(2), V].
struct ConsensusLayout {
  int M = 0, K = 0;
  int local_size() const { return 4 * M * K + 10; }
  int global_size() const { return 4 * M * (M - 1) * K + 5 * M; }
  /// (family, stage) segment offsets; stage is ignored for V.
  int local_offset(Family f, int stage) const;
  int local_length(Family f) const;
  int global_offset(Family f, int stage) const;
  int global_length(Family f) const;
};

struct LocalState {
  // Own covariances (optimizer units).
  std::array<std::vector<CMatrix>, kStages> W;  // [i][k]
  std::array<CMatrix, kStages> R;
  double delta = 0.0;
  double s = 0.0;  // s >= delta^2, the squared stage-2 radius
  RVector z;       // consensus locals, ConsensusLayout order
  std::array<std::vector<double>, kStages> xi, psi;  // [i][k]
  std::array<double, kStages> lambda{};
};

struct ConsensusState {
  std::vector<LocalState> local;
  RVector global;
  std::vector<RVector> dual;   // [m], raw multipliers (h_m uses dual / rho)
  std::array<double, 4> rho{};  // e, t, u, V
  std::vector<double> objective_history;  // watts; entry 0 is the initialization
  std::vector<double> residual_history;   // max relative consensus residual per iteration
  int iterations = 0;
  bool converged = false;
  std::string status = "running";
};

struct DecentralOptions {
  double eps2 = 1e-3;
  int max_iter = 100;
  double residual_tol = 1e-4;
  double rho_initial = 1.0;
  double rho_scale = 1.5;
  double rho_cap = 1e12;
  double power_unit = 1e-3;
  bool recover = true;
  /// Fixed-sensing design: delta_m from this MSE (m^2) and Tr Q_fused <= it.
  std::optional<double> fixed_mse;
  CentralOptions init;           // used for the shared starting point
  conic::SolverOptions solver;
  std::ostream* trace = nullptr;     // JSON lines per iteration
  std::ostream* messages = nullptr;  // JSON lines per message record
};

/// Builds the V1 program of BS m from its local view and the shared snapshot and
/// updates the local state. Returns the solve report.
BlockReport update_local_block1(int m, ConsensusState& st, const LocalView& view, const SelectionMaps* maps,
                                const DecentralOptions& opt, double power_fraction = 1.0);
BlockReport update_local_block2(int m, ConsensusState& st, const LocalView& view, const DecentralOptions& opt);

/// Closed-form least-squares consensus averages.
void update_globals(ConsensusState& st, const SelectionMaps& maps);
/// dual_m += rho * (z_m - A_m global).
void update_duals(ConsensusState& st, const SelectionMaps& maps);
/// Max over families of |z - A G| / max(|A G|, |z|) across BSs.
/// Per-family relative residual, ordered e, t, u, V.
std::array<double, 4> family_residuals(const ConsensusState& st, const SelectionMaps& maps);
double consensus_residual(const ConsensusState& st, const SelectionMaps& maps);

/// Consistent starting point from the shared initialization.
ConsensusState initialize_consensus(const NormalizedModel& mdl, const DecentralOptions& opt);

BeamformingSolution assemble_solution(const ConsensusState& st, int M, int N, int K);

struct MessageRecord {
  int iter = 0;
  int bs = 0;
  std::string kind;  // locals_up, globals_down, duals_local
  int scalars = 0;
};

/// Scalars the controller and BSs exchange in one ADMM iteration.
std::vector<MessageRecord> iteration_messages(int iter, int M, int K);
/// Real scalars a centralized design collects per frame: echoes and CSI, 2(MNL + M^2 K N + M N).
long long centralized_ledger(int M, int N, int K, int L);

struct DecentralResult {
  ConsensusState state;
  BeamformingSolution solution;  // watts
  RecoveryReport recovery;
  std::vector<MessageRecord> messages;
};

/// Algorithm 2. For M = 1 the consensus terms vanish and the local blocks alternate alone.
DecentralResult run_algorithm2(const Scenario& sc, const DecentralOptions& opt = {});

}  // namespace isac
