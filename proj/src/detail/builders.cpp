#include "detail/builders.hpp"

namespace isac::detail {

CovarianceVars CovarianceVars::add(Program& p, int M, int N, int K, const std::vector<int>& bs,
                                   std::array<bool, kStages> stages) {
  CovarianceVars v;
  for (int i = 0; i < kStages; ++i) {
    v.W[i].assign(M, std::vector<HermitianVar>(K));
    v.R[i].assign(M, HermitianVar{});
    if (!stages[i]) continue;
    for (int m : bs) {
      for (int k = 0; k < K; ++k)
        v.W[i][m][k] = p.add_hermitian(N, "W" + std::to_string(i) + std::to_string(m) + std::to_string(k));
      v.R[i][m] = p.add_hermitian(N, "R" + std::to_string(i) + std::to_string(m));
    }
  }
  return v;
}

void CovarianceVars::load(const BeamformingSolution& X, RVector& x) const {
  for (int i = 0; i < kStages; ++i)
    for (size_t m = 0; m < R[i].size(); ++m) {
      if (R[i][m].n == 0) continue;
      for (size_t k = 0; k < W[i][m].size(); ++k) conic::set_matrix(W[i][m][k], X.W[i][m][k], x);
      conic::set_matrix(R[i][m], X.R[i][m], x);
    }
}

void CovarianceVars::extract(const RVector& x, BeamformingSolution& X) const {
  for (int i = 0; i < kStages; ++i)
    for (size_t m = 0; m < R[i].size(); ++m) {
      if (R[i][m].n == 0) continue;
      for (size_t k = 0; k < W[i][m].size(); ++k) X.W[i][m][k] = conic::to_matrix(W[i][m][k], x);
      X.R[i][m] = conic::to_matrix(R[i][m], x);
    }
}

namespace {

CMatrix corner(int n) {
  CMatrix E = CMatrix::Zero(n + 1, n + 1);
  E(n, n) = 1.0;
  return E;
}

CMatrix top_identity(int n) {
  CMatrix E = CMatrix::Zero(n + 1, n + 1);
  E.topLeftCorner(n, n).setIdentity();
  return E;
}

}  // namespace

AffineMatrix<Complex> s_procedure_affine(const MatrixSlot& W, int m, const std::vector<MatrixSlot>& R,
                                         const ScalarSlot& xi, const ScalarSlot& eta, const LinearExpr& r2,
                                         const LinearExpr& extra, const CVector& g) {
  const int n = static_cast<int>(g.size());
  const int M = static_cast<int>(R.size());
  const int N = n / M;
  if (N * M != n) throw InvalidArgument("s_procedure_affine: stacked dimension mismatch");
  AffineMatrix<Complex> F(n + 1);
  CMatrix B(n, n + 1);
  B.leftCols(n).setIdentity();
  B.col(n) = g;
  const CMatrix E = corner(n);

  // eta I and -eta r2
  if (eta.is_var()) {
    if (!r2.terms.empty()) throw InvalidArgument("s_procedure_affine: eta and r2 both variable");
    F.add_term(eta.var, top_identity(n) - r2.constant * E);
  } else {
    F.add_constant(eta.value * top_identity(n));
    F.add_expr(r2 * -eta.value, E);
  }
  // xi (1 + extra)
  if (xi.is_var()) {
    if (!extra.terms.empty()) throw InvalidArgument("s_procedure_affine: xi and extra both variable");
    F.add_term(xi.var, (1.0 + extra.constant) * E);
  } else {
    F.add_expr((LinearExpr(1.0) + extra) * xi.value, E);
  }
  // -B_m^H W B_m
  const CMatrix Bm = B.middleRows(m * N, N);
  if (W.var)
    F.add_congruence(*W.var, Bm, -1.0);
  else
    F.add_constant(-Bm.adjoint() * W.value * Bm);
  // + xi B_s^H R_s B_s
  for (int s = 0; s < M; ++s) {
    const CMatrix Bs = B.middleRows(s * N, N);
    if (R[s].var) {
      if (xi.is_var()) throw InvalidArgument("s_procedure_affine: xi and R both variable");
      F.add_congruence(*R[s].var, Bs, xi.value);
    } else if (xi.is_var()) {
      F.add_term(xi.var, Bs.adjoint() * R[s].value * Bs);
    } else {
      F.add_constant(xi.value * Bs.adjoint() * R[s].value * Bs);
    }
  }
  return F;
}

AffineMatrix<Complex> phi_affine(const MatrixSlot& R, const ScalarSlot& lambda, const LinearExpr& r2,
                                 const LinearExpr& u, const CVector& g) {
  const int n = static_cast<int>(g.size());
  AffineMatrix<Complex> F(n + 1);
  const CMatrix E = corner(n);
  if (lambda.is_var()) {
    if (!r2.terms.empty()) throw InvalidArgument("phi_affine: lambda and r2 both variable");
    F.add_term(lambda.var, top_identity(n) - r2.constant * E);
  } else {
    F.add_constant(lambda.value * top_identity(n));
    F.add_expr(r2 * -lambda.value, E);
  }
  F.add_expr(u * -1.0, E);
  CMatrix D(n, n + 1);
  D.leftCols(n).setIdentity();
  D.col(n) = g;
  if (R.var)
    F.add_congruence(*R.var, D, 1.0);
  else
    F.add_constant(D.adjoint() * R.value * D);
  return F;
}

LinearExpr add_trace_inverse_epigraph(Program& p, const std::array<LinearExpr, 3>& F, const std::string& tag) {
  const int t00 = p.add_scalar(tag + ".T00"), t01 = p.add_scalar(tag + ".T01"), t11 = p.add_scalar(tag + ".T11");
  AffineMatrix<double> A(4);
  auto unit = [](int r, int c) {
    RMatrix E = RMatrix::Zero(4, 4);
    E(r, c) = 1.0;
    E(c, r) = 1.0;
    return E;
  };
  RMatrix d00 = RMatrix::Zero(4, 4), d11 = RMatrix::Zero(4, 4), d22 = RMatrix::Zero(4, 4), d33 = RMatrix::Zero(4, 4);
  d00(0, 0) = 1.0;
  d11(1, 1) = 1.0;
  d22(2, 2) = 1.0;
  d33(3, 3) = 1.0;
  A.add_term(t00, d00);
  A.add_term(t01, unit(0, 1));
  A.add_term(t11, d11);
  A.add_constant(unit(0, 2) + unit(1, 3));
  A.add_expr(F[0], d22);
  A.add_expr(F[1], unit(2, 3));
  A.add_expr(F[2], d33);
  p.add_lmi(std::move(A), tag);
  return LinearExpr::variable(t00) + LinearExpr::variable(t11);
}

std::array<LinearExpr, 3> fim_expr(const CovarianceVars& v, const FimOperator& op) {
  std::array<LinearExpr, 3> out;
  for (size_t tx = 0; tx < op.coef.size() && tx < v.R[0].size(); ++tx) {
    if (v.R[0][tx].n == 0) continue;
    for (int e = 0; e < 3; ++e) {
      const CMatrix& C = op.coef[tx][e];
      if (C.isZero(0.0)) continue;
      for (const auto& W : v.W[0][tx]) out[e] += conic::re_trace(W, C);
      out[e] += conic::re_trace(v.R[0][tx], C);
    }
  }
  return out;
}

LinearExpr interference_expr(const CovarianceVars& v, const NormalizedModel& mdl, int stage, int m, int k) {
  LinearExpr z(1.0);
  for (int s = 0; s < mdl.M; ++s) {
    const CVector& h = mdl.h[s][m][k];
    for (int kb = 0; kb < mdl.K; ++kb)
      if (s != m || kb != k) z += conic::quadratic_form(v.W[stage][s][kb], h);
    z += conic::quadratic_form(v.R[stage][s], h);
  }
  return z;
}

LinearExpr signal_expr(const CovarianceVars& v, const NormalizedModel& mdl, int stage, int m, int k) {
  return conic::quadratic_form(v.W[stage][m][k], mdl.h[m][m][k]);
}

LinearExpr power_expr(const CovarianceVars& v, int m, const std::array<double, kStages>& tau) {
  LinearExpr e;
  for (int i = 0; i < kStages; ++i) {
    for (const auto& W : v.W[i][m]) e += conic::trace(W) * tau[i];
    e += conic::trace(v.R[i][m]) * tau[i];
  }
  return e;
}

LinearExpr rate_surrogate_expr(const RateSurrogate& s, const CovarianceVars& v) {
  LinearExpr e(std::log2(s.Z0));
  const int i = s.stage;
  for (size_t mb = 0; mb < s.grad_W.size(); ++mb) {
    for (size_t kb = 0; kb < s.grad_W[mb].size(); ++kb) {
      const CMatrix& G = s.grad_W[mb][kb];
      if (G.isZero(0.0)) continue;
      e += conic::re_trace(v.W[i][mb][kb], G);
      e.constant -= (G * s.expansion.W[i][mb][kb]).trace().real();
    }
    const CMatrix& G = s.grad_R[mb];
    e += conic::re_trace(v.R[i][mb], G);
    e.constant -= (G * s.expansion.R[i][mb]).trace().real();
  }
  return e;
}

double power_value(const BeamformingSolution& X, int m, const std::array<double, kStages>& tau) {
  double p = 0.0;
  for (int i = 0; i < kStages; ++i) {
    for (const auto& W : X.W[i][m]) p += tau[i] * W.trace().real();
    p += tau[i] * X.R[i][m].trace().real();
  }
  return p;
}

std::vector<int> all_bs(int M) {
  std::vector<int> v(M);
  for (int m = 0; m < M; ++m) v[m] = m;
  return v;
}

std::vector<MatrixSlot> r_slots(const CovarianceVars& v, int stage) {
  std::vector<MatrixSlot> out;
  for (const auto& R : v.R[stage]) out.push_back({&R, {}});
  return out;
}

std::vector<MatrixSlot> r_values(const BeamformingSolution& X, int stage) {
  std::vector<MatrixSlot> out;
  for (const auto& R : X.R[stage]) out.push_back({nullptr, R});
  return out;
}

CVector stacked_g(const NormalizedModel& mdl) {
  CVector g(mdl.M * mdl.N);
  for (int m = 0; m < mdl.M; ++m) g.segment(m * mdl.N, mdl.N) = mdl.g_bar[m];
  return g;
}

Mat2 stage1_fim(const BeamformingSolution& X, const FimOperator& op) {
  std::vector<CMatrix> S;
  for (int m = 0; m < X.M(); ++m) S.push_back(X.transmit_covariance(0, m));
  return op.apply(S);
}

// starting value of the epigraph slack T for a given F.
void load_epigraph(const Mat2& F, int t_idx, RVector& x) {
  Mat2 T = Mat2::Identity();
  Eigen::SelfAdjointEigenSolver<Mat2> es(F);
  if (es.eigenvalues().minCoeff() > 0.0) {
    const Mat2 Fi = F.inverse();
    T = Fi + 1e-9 * Fi.trace() * Mat2::Identity();
  }
  x(t_idx) = T(0, 0);
  x(t_idx + 1) = T(0, 1);
  x(t_idx + 2) = T(1, 1);
}

bool usable(const conic::SolveResult& r, const Program& p) {
  if (r.status == conic::SolveStatus::optimal) return true;
  if (r.status == conic::SolveStatus::infeasible) return false;
  return p.max_violation(r.x).first <= 0.0;
}

}  // namespace isac::detail
