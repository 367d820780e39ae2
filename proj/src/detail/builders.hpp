#pragma once

#include <array>
#include <vector>

#include "isac/conic/program.hpp"
#include "isac/conic/solver.hpp"
#include "isac/model.hpp"
#include "isac/surrogates.hpp"

namespace isac::detail {

using conic::AffineMatrix;
using conic::HermitianVar;
using conic::LinearExpr;
using conic::Program;

/// Covariance variables for a subset of BSs (unused entries have n == 0).
struct CovarianceVars {
  std::array<std::vector<std::vector<HermitianVar>>, kStages> W;  // [i][m][k]
  std::array<std::vector<HermitianVar>, kStages> R;               // [i][m]

  static CovarianceVars add(Program& p, int M, int N, int K, const std::vector<int>& bs,
                            std::array<bool, kStages> stages = {true, true});
  void load(const BeamformingSolution& X, RVector& x) const;
  /// Copies the variable blocks into X (other entries untouched).
  void extract(const RVector& x, BeamformingSolution& X) const;
};

/// Either a decision variable or a fixed value.
struct ScalarSlot {
  int var = -1;
  double value = 0.0;
  bool is_var() const { return var >= 0; }
  LinearExpr expr() const { return is_var() ? LinearExpr::variable(var) : LinearExpr(value); }
};

struct MatrixSlot {
  const HermitianVar* var = nullptr;
  CMatrix value;
};

/// S-procedure LMI
///   [eta I, 0; 0, -eta r2 + xi (1 + extra)] - B^H (W_bar - xi R_bar) B,  B = [I, g].
/// W sits at block `m` of the stacked R blocks; each bilinear product needs at least
/// one fixed factor.
AffineMatrix<Complex> s_procedure_affine(const MatrixSlot& W, int m, const std::vector<MatrixSlot>& R,
                                         const ScalarSlot& xi, const ScalarSlot& eta, const LinearExpr& r2,
                                         const LinearExpr& extra, const CVector& g);

/// Phi LMI [lambda I, 0; 0, -lambda r2 - u] + D^H R D with D = [I, g].
AffineMatrix<Complex> phi_affine(const MatrixSlot& R, const ScalarSlot& lambda, const LinearExpr& r2,
                                 const LinearExpr& u, const CVector& g);

/// Adds T (3 scalars) with [T I; I F] >= 0, where F entries are affine; returns Tr T.
LinearExpr add_trace_inverse_epigraph(Program& p, const std::array<LinearExpr, 3>& F, const std::string& tag);

/// Entries (00, 01, 11) of op applied to the stage-1 covariances present in v.
std::array<LinearExpr, 3> fim_expr(const CovarianceVars& v, const FimOperator& op);

/// Z of user (m,k) in `stage` (unit noise included) and own signal h^H W h, over the variables of v.
LinearExpr interference_expr(const CovarianceVars& v, const NormalizedModel& mdl, int stage, int m, int k);
LinearExpr signal_expr(const CovarianceVars& v, const NormalizedModel& mdl, int stage, int m, int k);

/// tau-weighted power of BS m.
LinearExpr power_expr(const CovarianceVars& v, int m, const std::array<double, kStages>& tau);

/// Linear form Y_bar of a rate surrogate in the variables of v (all BSs present).
LinearExpr rate_surrogate_expr(const RateSurrogate& s, const CovarianceVars& v);

/// tau-weighted sum of the power expr values
double power_value(const BeamformingSolution& X, int m, const std::array<double, kStages>& tau);

std::vector<int> all_bs(int M);
std::vector<MatrixSlot> r_slots(const CovarianceVars& v, int stage);
std::vector<MatrixSlot> r_values(const BeamformingSolution& X, int stage);
CVector stacked_g(const NormalizedModel& mdl);
Mat2 stage1_fim(const BeamformingSolution& X, const FimOperator& op);
/// Writes a strictly feasible T for [T I; I F] >= 0 at x(t_idx..t_idx+2).
void load_epigraph(const Mat2& F, int t_idx, RVector& x);
/// Optimal, or stopped early at a point with no violated constraint.
bool usable(const conic::SolveResult& r, const Program& p);

}  // namespace isac::detail
