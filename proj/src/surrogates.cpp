#include "isac/surrogates.hpp"

#include <cmath>

namespace isac {

namespace {
const double kLn2 = std::log(2.0);
}

double RateSurrogate::evaluate(const BeamformingSolution& X) const {
  double v = std::log2(Z0);
  for (size_t mb = 0; mb < grad_W.size(); ++mb) {
    for (size_t kb = 0; kb < grad_W[mb].size(); ++kb)
      v += (grad_W[mb][kb] * (X.W[stage][mb][kb] - expansion.W[stage][mb][kb])).trace().real();
    v += (grad_R[mb] * (X.R[stage][mb] - expansion.R[stage][mb])).trace().real();
  }
  return v;
}

RateSurrogate rate_surrogate(const BeamformingSolution& expansion, const NormalizedModel& mdl, int stage, int m,
                             int k) {
  RateSurrogate s;
  s.stage = stage;
  s.m = m;
  s.k = k;
  s.Z0 = interference_plus_noise(expansion, mdl, stage, m, k);
  if (!(s.Z0 > 0.0)) throw InvalidExpansionPoint("rate_surrogate: Z <= 0 at the expansion point");
  s.expansion = expansion;
  s.grad_W.assign(mdl.M, std::vector<CMatrix>(mdl.K));
  s.grad_R.resize(mdl.M);
  const double c = 1.0 / (kLn2 * s.Z0);
  for (int mb = 0; mb < mdl.M; ++mb) {
    const CVector& h = mdl.h[mb][m][k];
    const CMatrix H = h * h.adjoint();
    for (int kb = 0; kb < mdl.K; ++kb)
      s.grad_W[mb][kb] = (mb == m && kb == k) ? CMatrix::Zero(mdl.N, mdl.N) : CMatrix(c * H);
    s.grad_R[mb] = c * H;
  }
  return s;
}

double LeakageSurrogate::slope(int stage) const { return tau[stage] / (kLn2 * (1.0 + xi0[stage])); }

double LeakageSurrogate::evaluate(const std::array<double, kStages>& xi) const {
  double v = 0.0;
  for (int i = 0; i < kStages; ++i) v += tau[i] * std::log2(1.0 + xi0[i]) + slope(i) * (xi[i] - xi0[i]);
  return v;
}

double LeakageSurrogate::exact(const std::array<double, kStages>& xi) const {
  double v = 0.0;
  for (int i = 0; i < kStages; ++i) v += tau[i] * std::log2(1.0 + xi[i]);
  return v;
}

LeakageSurrogate leakage_surrogate(const std::array<double, kStages>& xi_prev, const std::array<double, kStages>& tau) {
  for (double x : xi_prev)
    if (x < 0.0) throw InvalidExpansionPoint("leakage_surrogate: negative expansion point");
  return {xi_prev, tau};
}

double CrbCouplingSurrogate::rhs(double delta) const {
  const double a2 = a * a, gap = delta0 - b;
  return a2 * gap * gap + 2.0 * a2 * gap * (delta - delta0);
}

double CrbCouplingSurrogate::value(double trace_finv, double delta) const { return trace_finv - rhs(delta); }

double CrbCouplingSurrogate::exact(double trace_finv, double delta) const {
  return trace_finv - a * a * (delta - b) * (delta - b);
}

CrbCouplingSurrogate crb_coupling_constraint(double delta_prev, const CrbCoupling& coupling) {
  if (!(delta_prev > coupling.b))
    throw InvalidExpansionPoint("crb_coupling_constraint: expansion point must exceed b");
  return {coupling.a, coupling.b, delta_prev};
}

CMatrix s_procedure_matrix(const CMatrix& W_bar, const CMatrix& R_bar, double xi, double eta, const CVector& g_bar,
                           double r2, double noise) {
  const int n = static_cast<int>(g_bar.size());
  if (W_bar.rows() != n || R_bar.rows() != n || W_bar.cols() != n || R_bar.cols() != n)
    throw InvalidArgument("s_procedure_matrix: dimension mismatch");
  CMatrix B(n, n + 1);
  B.leftCols(n).setIdentity();
  B.col(n) = g_bar;
  CMatrix out = CMatrix::Zero(n + 1, n + 1);
  out.topLeftCorner(n, n).diagonal().setConstant(eta);
  out(n, n) = -eta * r2 + xi * noise;
  out -= B.adjoint() * (W_bar - xi * R_bar) * B;
  return out;
}

CMatrix embed_block(const CMatrix& W, int m, int M) {
  const int N = static_cast<int>(W.rows());
  CMatrix out = CMatrix::Zero(M * N, M * N);
  out.block(m * N, m * N, N, N) = W;
  return out;
}

}  // namespace isac
