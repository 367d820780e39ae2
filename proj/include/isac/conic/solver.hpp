#pragma once

#include <string>

#include "isac/conic/program.hpp"

namespace isac::conic {

enum class SolveStatus { optimal, infeasible, iteration_limit, numerical_error };

const char* to_string(SolveStatus s);

struct SolverOptions {
  double gap_tol = 1e-8;       // absolute barrier duality gap m/t
  double rel_gap_tol = 1e-10;  // relative to |objective|
  double mu = 20.0;
  double t_init = 1.0;
  int max_newton = 400;
  double newton_tol = 1e-9;    // half squared Newton decrement
  double radius = 1e7;         // implicit bound |x| < radius
};

struct SolveResult {
  SolveStatus status = SolveStatus::numerical_error;
  RVector x;
  double objective = 0.0;
  int newton_steps = 0;
  std::string failed_tag;    // most violated family on infeasibility
  double max_violation = 0.0;
};

/// Backend named by ISAC_SOLVER (default "barrier"). Throws ConfigError for unknown names.
std::string solver_backend();

/// Solves the program starting from x0, which need not be feasible.
SolveResult solve(const Program& prog, const RVector& x0, const SolverOptions& opt = {});

}  // namespace isac::conic
