#include "isac/decentral_opt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "detail/builders.hpp"

namespace isac {

using conic::HermitianVar;
using conic::LinearExpr;
using conic::Program;
using detail::MatrixSlot;
using detail::ScalarSlot;
using detail::usable;

namespace {

constexpr std::array<Family, 4> kFamilies{Family::e, Family::t, Family::u, Family::V};

int family_index(Family f) { return static_cast<int>(f); }
int family_stages(Family f) { return f == Family::V ? 1 : kStages; }

RMatrix normal_inverse(const std::vector<RMatrix>& maps) {
  RMatrix N = RMatrix::Zero(maps[0].cols(), maps[0].cols());
  for (const auto& A : maps) N += A.transpose() * A;
  return N.inverse();
}

}  // namespace

int SelectionMaps::global_index(int source, int victim, int k) const {
  return (source * (M - 1) + (victim < source ? victim : victim - 1)) * K + k;
}

SelectionMaps SelectionMaps::build(int M, int K) {
  if (M < 2) throw InvalidArgument("selection maps: degenerate topology (M < 2)");
  if (K < 1) throw InvalidArgument("selection maps: K must be >= 1");
  SelectionMaps s;
  s.M = M;
  s.K = K;
  const int ge = M * (M - 1) * K;
  for (int m = 0; m < M; ++m) {
    RMatrix E = RMatrix::Zero(M * K, ge);
    for (int k = 0; k < K; ++k)
      for (int src = 0; src < M; ++src)
        if (src != m) E(k, s.global_index(src, m, k)) = 1.0;
    int j = 0;
    for (int victim = 0; victim < M; ++victim) {
      if (victim == m) continue;
      for (int k = 0; k < K; ++k) E(K + j * K + k, s.global_index(m, victim, k)) = 1.0;
      ++j;
    }
    s.E.push_back(E);
    s.T.push_back(E);

    RMatrix U = RMatrix::Zero(2, M);
    for (int o = 0; o < M; ++o)
      if (o != m) U(0, o) = 1.0;
    U(1, m) = 1.0;
    s.U.push_back(U);

    RMatrix V = RMatrix::Zero(6, 3 * M);
    for (int o = 0; o < M; ++o)
      for (int e = 0; e < 3; ++e) {
        if (o != m) V(e, 3 * o + e) = 1.0;
        if (o == m) V(3 + e, 3 * o + e) = 1.0;
      }
    s.V.push_back(V);
  }
  s.E_normal_inv = normal_inverse(s.E);
  s.T_normal_inv = normal_inverse(s.T);
  s.U_normal_inv = normal_inverse(s.U);
  s.V_normal_inv = normal_inverse(s.V);
  return s;
}

const RMatrix& SelectionMaps::map(Family f, int m) const {
  switch (f) {
    case Family::e:
      return E[m];
    case Family::t:
      return T[m];
    case Family::u:
      return U[m];
    case Family::V:
      break;
  }
  return V[m];
}

const RMatrix& SelectionMaps::normal_inv(Family f) const {
  switch (f) {
    case Family::e:
      return E_normal_inv;
    case Family::t:
      return T_normal_inv;
    case Family::u:
      return U_normal_inv;
    case Family::V:
      break;
  }
  return V_normal_inv;
}

int ConsensusLayout::local_length(Family f) const {
  switch (f) {
    case Family::e:
    case Family::t:
      return M * K;
    case Family::u:
      return 2;
    case Family::V:
      break;
  }
  return 6;
}

int ConsensusLayout::local_offset(Family f, int stage) const {
  const int mk = M * K;
  switch (f) {
    case Family::e:
      return stage * mk;
    case Family::t:
      return 2 * mk + stage * mk;
    case Family::u:
      return 4 * mk + 2 * stage;
    case Family::V:
      break;
  }
  return 4 * mk + 4;
}

int ConsensusLayout::global_length(Family f) const {
  switch (f) {
    case Family::e:
    case Family::t:
      return M * (M - 1) * K;
    case Family::u:
      return M;
    case Family::V:
      break;
  }
  return 3 * M;
}

int ConsensusLayout::global_offset(Family f, int stage) const {
  const int ge = M * (M - 1) * K;
  switch (f) {
    case Family::e:
      return stage * ge;
    case Family::t:
      return 2 * ge + stage * ge;
    case Family::u:
      return 4 * ge + stage * M;
    case Family::V:
      break;
  }
  return 4 * ge + 2 * M;
}

namespace {

Mat2 sym2(double a, double b, double c) {
  Mat2 A;
  A << a, b, b, c;
  return A;
}

double local_power(const LocalState& ls, const std::array<double, kStages>& tau) {
  double p = 0.0;
  for (int i = 0; i < kStages; ++i) {
    for (const auto& W : ls.W[i]) p += tau[i] * W.trace().real();
    p += tau[i] * ls.R[i].trace().real();
  }
  return p;
}

Mat2 own_fim(const LocalState& ls, const LocalView& view) {
  CMatrix S = ls.R[0];
  for (const auto& W : ls.W[0]) S += W;
  const auto& c = view.fim_tx().coef[view.bs()];
  return sym2((c[0] * S).trace().real(), (c[1] * S).trace().real(), (c[2] * S).trace().real());
}

double quad(const CMatrix& X, const CVector& h) { return (h.adjoint() * X * h)(0, 0).real(); }

BlockReport report(const conic::SolveResult& r, const Program& p, bool ok) {
  BlockReport b;
  b.ok = ok;
  b.status = r.status;
  b.newton_steps = r.newton_steps;
  const auto [v, tag] = p.max_violation(r.x);
  b.max_violation = v;
  b.failed_tag = ok ? std::string() : (r.failed_tag.empty() ? tag : r.failed_tag);
  return b;
}

std::string tag_of(const char* name, int m, int i, int k) {
  return std::string(name) + "[" + std::to_string(m) + "," + std::to_string(i) + "," + std::to_string(k) + "]";
}

}  // namespace

BlockReport update_local_block1(int m, ConsensusState& st, const LocalView& view, const SelectionMaps* maps,
                                const DecentralOptions& opt, double power_fraction) {
  const int M = view.M(), N = view.N(), K = view.K();
  const bool consensus = maps != nullptr;
  const ConsensusLayout lay{M, K};
  LocalState& ls = st.local[m];

  Program p;
  std::array<std::vector<HermitianVar>, kStages> Wv;
  std::array<HermitianVar, kStages> Rv;
  for (int i = 0; i < kStages; ++i) {
    for (int k = 0; k < K; ++k) Wv[i].push_back(p.add_hermitian(N, tag_of("W", m, i, k)));
    Rv[i] = p.add_hermitian(N, tag_of("R", m, i, 0));
  }
  const int d = p.add_scalar("delta");
  const int s = p.add_scalar("s");
  int z0 = -1;
  if (consensus) {
    z0 = p.num_variables();
    for (int j = 0; j < lay.local_size(); ++j) p.add_scalar("z" + std::to_string(j));
  }
  auto z = [&](Family f, int i, int j) { return LinearExpr::variable(z0 + lay.local_offset(f, i) + j); };
  auto zval = [&](Family f, int i, int j) { return ls.z(lay.local_offset(f, i) + j); };
  if (consensus)
    for (int i = 0; i < kStages; ++i)
      for (int j = 0; j < M * K; ++j) {
        p.add_linear(-z(Family::e, i, j), tag_of("e>=0", m, i, j));
        p.add_linear(-z(Family::t, i, j), tag_of("t>=0", m, i, j));
      }

  // C1 and objective
  LinearExpr power;
  for (int i = 0; i < kStages; ++i) {
    for (int k = 0; k < K; ++k) power += conic::trace(Wv[i][k]) * view.tau()[i];
    power += conic::trace(Rv[i]) * view.tau()[i];
  }
  p.add_linear(power - LinearExpr(power_fraction * view.p_max()), "C1");
  p.set_objective(power);

  // C2 with local interference copies
  for (int k = 0; k < K; ++k) {
    const CVector& h = view.h(m, k);
    LinearExpr lin(view.rate_target());
    std::vector<std::pair<double, LinearExpr>> logs;
    for (int i = 0; i < kStages; ++i) {
      LinearExpr Z(1.0);
      double Z0 = 1.0;
      for (int kk = 0; kk < K; ++kk)
        if (kk != k) {
          Z += conic::quadratic_form(Wv[i][kk], h);
          Z0 += quad(ls.W[i][kk], h);
        }
      Z += conic::quadratic_form(Rv[i], h);
      Z0 += quad(ls.R[i], h);
      if (consensus) {
        Z += z(Family::e, i, k) + z(Family::t, i, k);
        Z0 += zval(Family::e, i, k) + zval(Family::t, i, k);
      }
      if (!(Z0 > 0.0)) throw InvalidExpansionPoint("local rate surrogate: Z <= 0 at expansion point");
      const LinearExpr Ybar = LinearExpr(std::log2(Z0)) + (Z - LinearExpr(Z0)) * (1.0 / (Z0 * std::numbers::ln2));
      lin += Ybar * view.tau()[i];
      logs.emplace_back(view.tau()[i] / std::numbers::ln2, Z + conic::quadratic_form(Wv[i][k], h));
    }
    p.add_smooth(std::make_shared<conic::LogSumConstraint>(lin, logs), tag_of("C2", m, 0, k));
  }

  // Psi (C5a/C5b), Phi (C10a/C10b), C8, C9
  const double b1sq = view.beta1() * view.beta1();
  for (int i = 0; i < kStages; ++i) {
    const LinearExpr r2 = i == 0 ? LinearExpr(b1sq) : LinearExpr::variable(s);
    const LinearExpr extra = consensus ? z(Family::u, i, 0) : LinearExpr();
    for (int k = 0; k < K; ++k)
      p.add_lmi(detail::s_procedure_affine({&Wv[i][k], {}}, 0, {{&Rv[i], {}}}, {-1, ls.xi[i][k]},
                                           {-1, ls.psi[i][k]}, r2, extra, view.g_bar()),
                tag_of("C5", m, i, k));
    if (!consensus) continue;
    p.add_lmi(detail::phi_affine({&Rv[i], {}}, {-1, ls.lambda[i]}, r2, z(Family::u, i, 1), view.g_bar()),
              tag_of("C10", m, i, 0));
    int j = 0;
    for (int victim = 0; victim < M; ++victim) {
      if (victim == m) continue;
      for (int k = 0; k < K; ++k) {
        const CVector& h = view.h(victim, k);
        LinearExpr e;
        for (int kk = 0; kk < K; ++kk) e += conic::quadratic_form(Wv[i][kk], h);
        p.add_linear(e - z(Family::e, i, K + j * K + k), tag_of("C8", m, i, victim * K + k));
        p.add_linear(conic::quadratic_form(Rv[i], h) - z(Family::t, i, K + j * K + k),
                     tag_of("C9", m, i, victim * K + k));
      }
      ++j;
    }
  }

  // C11 (trace-inverse epigraph on own FIM plus the others' shares) and C12
  const auto& coef = view.fim_tx().coef[m];
  std::array<LinearExpr, 3> F;
  for (int e = 0; e < 3; ++e) {
    for (int k = 0; k < K; ++k) F[e] += conic::re_trace(Wv[0][k], coef[e]);
    F[e] += conic::re_trace(Rv[0], coef[e]);
  }
  const CrbCoupling& cp = view.coupling();
  int t_idx = -1;
  if (std::isfinite(cp.a) || opt.fixed_mse) {
    std::array<LinearExpr, 3> Fe = F;
    if (consensus)
      for (int e = 0; e < 3; ++e) Fe[e] += z(Family::V, 0, e);
    t_idx = p.num_variables();
    const LinearExpr trT = detail::add_trace_inverse_epigraph(p, Fe, "C11.epigraph");
    if (opt.fixed_mse) {
      p.add_linear(trT - LinearExpr(*opt.fixed_mse), "C11.mse");
      p.add_linear(LinearExpr(cp.radius(*opt.fixed_mse)) - LinearExpr::variable(d), "C11");
    } else {
      const CrbCouplingSurrogate sur = crb_coupling_constraint(ls.delta, cp);
      const double r0 = sur.rhs(0.0), slope = sur.rhs(1.0) - r0;
      p.add_linear(trT - LinearExpr(r0) - LinearExpr::variable(d) * slope, "C11");
    }
  } else {
    p.add_linear(LinearExpr(cp.b) - LinearExpr::variable(d), "C11");
  }
  if (consensus) {
    conic::AffineMatrix<double> A(2);
    const RMatrix E00 = sym2(1, 0, 0), E01 = sym2(0, 1, 0), E11 = sym2(0, 0, 1);
    A.add_expr(F[0] - z(Family::V, 0, 3), E00);
    A.add_expr(F[1] - z(Family::V, 0, 4), E01);
    A.add_expr(F[2] - z(Family::V, 0, 5), E11);
    p.add_lmi(std::move(A), "C12");
  }
  p.add_smooth(std::make_shared<conic::QuadraticConstraint>(-LinearExpr::variable(s),
                                                            std::vector<std::pair<double, LinearExpr>>{
                                                                {1.0, LinearExpr::variable(d)}}),
               "s>=delta^2");
  p.add_linear(-LinearExpr::variable(d), "delta>=0");

  // consensus penalties
  if (consensus) {
    for (Family f : kFamilies)
      for (int i = 0; i < family_stages(f); ++i) {
        const RMatrix& A = maps->map(f, m);
        const RVector g = st.global.segment(lay.global_offset(f, i), lay.global_length(f));
        const RVector target = A * g;
        const double rho = st.rho[family_index(f)];
        for (int j = 0; j < lay.local_length(f); ++j) {
          const double lam = st.dual[m](lay.local_offset(f, i) + j);
          p.add_penalty(z(f, i, j) - LinearExpr(target(j) - lam / rho), rho);
        }
      }
  }

  RVector x0 = RVector::Zero(p.num_variables());
  for (int i = 0; i < kStages; ++i) {
    for (int k = 0; k < K; ++k) conic::set_matrix(Wv[i][k], ls.W[i][k], x0);
    conic::set_matrix(Rv[i], ls.R[i], x0);
  }
  x0(d) = ls.delta;
  x0(s) = ls.s;
  if (consensus) x0.segment(z0, lay.local_size()) = ls.z;
  if (t_idx >= 0) {
    Mat2 Fv = own_fim(ls, view);
    if (consensus) Fv += sym2(ls.z(lay.local_offset(Family::V, 0)), ls.z(lay.local_offset(Family::V, 0) + 1),
                              ls.z(lay.local_offset(Family::V, 0) + 2));
    Mat2 T = Mat2::Identity();
    if (Eigen::SelfAdjointEigenSolver<Mat2>(Fv).eigenvalues().minCoeff() > 0.0) {
      const Mat2 Fi = Fv.inverse();
      T = Fi + 1e-9 * Fi.trace() * Mat2::Identity();
    }
    x0(t_idx) = T(0, 0);
    x0(t_idx + 1) = T(0, 1);
    x0(t_idx + 2) = T(1, 1);
  }

  const conic::SolveResult r = conic::solve(p, x0, opt.solver);
  const bool ok = usable(r, p);
  const BlockReport rep = report(r, p, ok);
  if (!ok) return rep;
  for (int i = 0; i < kStages; ++i) {
    for (int k = 0; k < K; ++k) ls.W[i][k] = conic::to_matrix(Wv[i][k], r.x);
    ls.R[i] = conic::to_matrix(Rv[i], r.x);
  }
  ls.delta = r.x(d);
  ls.s = r.x(s);
  if (consensus) ls.z = r.x.segment(z0, lay.local_size());
  return rep;
}

namespace {

/// Largest certified sensing floor u with Phi(R, lambda, u) >= 0.
std::pair<double, double> max_sensing_floor(const CMatrix& R, const CVector& g, double r2,
                                            const conic::SolverOptions& so) {
  Program p;
  const int lam = p.add_scalar("lambda"), u = p.add_scalar("u");
  p.add_linear(-LinearExpr::variable(lam), "lambda>=0");
  p.add_lmi(detail::phi_affine({nullptr, R}, {lam, 0.0}, LinearExpr(r2), LinearExpr::variable(u), g), "C10");
  // Bound u below so the barrier stays centered.
  p.add_linear(LinearExpr(-1e6) - LinearExpr::variable(u), "u_floor");
  p.set_objective(-LinearExpr::variable(u));
  RVector x0(2);
  x0 << 1.0, -1.0;
  const conic::SolveResult r = conic::solve(p, x0, so);
  if (!usable(r, p)) throw Infeasible("decentralized init: sensing floor program failed");
  return {r.x(lam), r.x(u)};
}

}  // namespace

BlockReport update_local_block2(int m, ConsensusState& st, const LocalView& view, const DecentralOptions& opt) {
  const int M = view.M(), K = view.K();
  const bool consensus = M > 1;
  const ConsensusLayout lay{M, K};
  LocalState& ls = st.local[m];
  Program p;
  std::array<std::vector<int>, kStages> xi, psi;
  for (int i = 0; i < kStages; ++i) {
    for (int k = 0; k < K; ++k) {
      xi[i].push_back(p.add_scalar(tag_of("xi", m, i, k)));
      psi[i].push_back(p.add_scalar(tag_of("psi", m, i, k)));
      p.add_linear(-LinearExpr::variable(xi[i][k]), tag_of("xi>=0", m, i, k));
      p.add_linear(-LinearExpr::variable(psi[i][k]), tag_of("psi>=0", m, i, k));
    }
  }
  LinearExpr obj;
  const double b1sq = view.beta1() * view.beta1();
  for (int k = 0; k < K; ++k) {
    const LeakageSurrogate sur = leakage_surrogate({ls.xi[0][k], ls.xi[1][k]}, view.tau());
    LinearExpr c3(sur.exact({ls.xi[0][k], ls.xi[1][k]}) - view.leak_target());
    for (int i = 0; i < kStages; ++i) {
      const double w = view.tau()[i] * sur.slope(i);
      obj += LinearExpr::variable(xi[i][k]) * w;
      c3 += (LinearExpr::variable(xi[i][k]) - LinearExpr(ls.xi[i][k])) * w;
      const double r2 = i == 0 ? b1sq : ls.s;
      const double ubar = consensus ? ls.z(lay.local_offset(Family::u, i)) : 0.0;
      p.add_lmi(detail::s_procedure_affine({nullptr, ls.W[i][k]}, 0, {{nullptr, ls.R[i]}}, {xi[i][k], 0.0},
                                           {psi[i][k], 0.0}, LinearExpr(r2), LinearExpr(ubar), view.g_bar()),
                tag_of("C5", m, i, k));
    }
    p.add_linear(c3, tag_of("C3", m, 0, k));
  }
  p.set_objective(obj);

  RVector x0(p.num_variables());
  for (int i = 0; i < kStages; ++i) {
    for (int k = 0; k < K; ++k) {
      x0(xi[i][k]) = ls.xi[i][k];
      x0(psi[i][k]) = ls.psi[i][k];
    }
  }
  const conic::SolveResult r = conic::solve(p, x0, opt.solver);
  const bool ok = usable(r, p);
  const BlockReport rep = report(r, p, ok);
  if (!ok) return rep;
  for (int i = 0; i < kStages; ++i) {
    for (int k = 0; k < K; ++k) {
      ls.xi[i][k] = r.x(xi[i][k]);
      ls.psi[i][k] = r.x(psi[i][k]);
    }
  }
  // lambda only enters C10, which has no objective weight: take the multiplier
  // that certifies the largest floor, so the next block-1 solve is not capped.
  if (consensus)
    for (int i = 0; i < kStages; ++i) {
      const double r2 = i == 0 ? b1sq : ls.s;
      try {
        const auto [lam, floor] = max_sensing_floor(ls.R[i], view.g_bar(), r2, opt.solver);
        if (floor >= ls.z(lay.local_offset(Family::u, i) + 1)) ls.lambda[i] = lam;
      } catch (const Infeasible&) {
      }
    }
  return rep;
}

void update_globals(ConsensusState& st, const SelectionMaps& maps) {
  const ConsensusLayout lay{maps.M, maps.K};
  for (Family f : kFamilies)
    for (int i = 0; i < family_stages(f); ++i) {
      const double rho = st.rho[family_index(f)];
      RVector rhs = RVector::Zero(lay.global_length(f));
      for (int m = 0; m < maps.M; ++m) {
        const RVector zl = st.local[m].z.segment(lay.local_offset(f, i), lay.local_length(f));
        const RVector dl = st.dual[m].segment(lay.local_offset(f, i), lay.local_length(f));
        rhs += maps.map(f, m).transpose() * (zl + dl / rho);
      }
      st.global.segment(lay.global_offset(f, i), lay.global_length(f)) = maps.normal_inv(f) * rhs;
    }
}

void update_duals(ConsensusState& st, const SelectionMaps& maps) {
  const ConsensusLayout lay{maps.M, maps.K};
  for (int m = 0; m < maps.M; ++m)
    for (Family f : kFamilies)
      for (int i = 0; i < family_stages(f); ++i) {
        const int off = lay.local_offset(f, i), len = lay.local_length(f);
        const RVector g = st.global.segment(lay.global_offset(f, i), lay.global_length(f));
        st.dual[m].segment(off, len) += st.rho[family_index(f)] * (st.local[m].z.segment(off, len) - maps.map(f, m) * g);
      }
}

std::array<double, 4> family_residuals(const ConsensusState& st, const SelectionMaps& maps) {
  const ConsensusLayout lay{maps.M, maps.K};
  std::array<double, 4> out{};
  for (Family f : kFamilies)
    for (int i = 0; i < family_stages(f); ++i) {
      double num = 0.0, den_g = 0.0, den_z = 0.0;
      for (int m = 0; m < maps.M; ++m) {
        const int off = lay.local_offset(f, i), len = lay.local_length(f);
        const RVector ag = maps.map(f, m) * st.global.segment(lay.global_offset(f, i), lay.global_length(f));
        const RVector zl = st.local[m].z.segment(off, len);
        num += (zl - ag).squaredNorm();
        den_g += ag.squaredNorm();
        den_z += zl.squaredNorm();
      }
      const double den = std::sqrt(std::max(den_g, den_z));
      if (den > 0.0) out[family_index(f)] = std::max(out[family_index(f)], std::sqrt(num) / den);
    }
  return out;
}

double consensus_residual(const ConsensusState& st, const SelectionMaps& maps) {
  const auto r = family_residuals(st, maps);
  return *std::max_element(r.begin(), r.end());
}

BeamformingSolution assemble_solution(const ConsensusState& st, int M, int N, int K) {
  BeamformingSolution X = BeamformingSolution::zeros(M, N, K);
  for (int m = 0; m < M; ++m)
    for (int i = 0; i < kStages; ++i) {
      for (int k = 0; k < K; ++k) X.W[i][m][k] = st.local[m].W[i][k];
      X.R[i][m] = st.local[m].R[i];
    }
  return X;
}

std::vector<MessageRecord> iteration_messages(int iter, int M, int K) {
  const int n = ConsensusLayout{M, K}.local_size();
  std::vector<MessageRecord> out;
  for (int m = 0; m < M; ++m) {
    out.push_back({iter, m, "locals_up", n});
    out.push_back({iter, m, "globals_down", n});
    out.push_back({iter, m, "duals_local", 0});
  }
  return out;
}

long long centralized_ledger(int M, int N, int K, int L) {
  const long long m = M, n = N, k = K, l = L;
  return 2 * (m * n * l + m * m * k * n + m * n);
}


ConsensusState initialize_consensus(const NormalizedModel& mdl, const DecentralOptions& opt) {
  const int M = mdl.M, K = mdl.K;
  CentralOptions io = opt.init;
  io.fixed_mse = opt.fixed_mse;
  const BcdState init = initialize_central(mdl, io);
  ConsensusState st;
  st.local.resize(M);
  const ConsensusLayout lay{M, K};
  for (int m = 0; m < M; ++m) {
    LocalState& ls = st.local[m];
    for (int i = 0; i < kStages; ++i) {
      ls.W[i] = init.X.W[i][m];
      ls.R[i] = init.X.R[i][m];
      ls.xi[i] = init.aux.xi[i][m];
      ls.psi[i].assign(K, 1.0);
    }
    ls.delta = init.delta[m];
    ls.s = ls.delta * ls.delta * (1.0 + 1e-6);
  }
  st.rho.fill(opt.rho_initial);
  if (M > 1) {
    const SelectionMaps maps = SelectionMaps::build(M, K);
    // own emissions and certified sensing floors
    std::array<std::vector<double>, kStages> u;
    std::vector<Mat2> Vown(M);
    for (int m = 0; m < M; ++m) {
      LocalState& ls = st.local[m];
      ls.z = RVector::Zero(lay.local_size());
      for (int i = 0; i < kStages; ++i) {
        int j = 0;
        for (int victim = 0; victim < M; ++victim) {
          if (victim == m) continue;
          for (int k = 0; k < K; ++k) {
            const CVector& h = mdl.h[m][victim][k];
            double e = 0.0;
            for (int kk = 0; kk < K; ++kk) e += quad(ls.W[i][kk], h);
            ls.z(lay.local_offset(Family::e, i) + K + j * K + k) = e * (1.0 + 1e-6) + 1e-9;
            ls.z(lay.local_offset(Family::t, i) + K + j * K + k) = quad(ls.R[i], h) * (1.0 + 1e-6) + 1e-9;
          }
          ++j;
        }
        const double r2 = i == 0 ? mdl.beta1[m] * mdl.beta1[m] : ls.s;
        const auto [lam, um] = max_sensing_floor(ls.R[i], mdl.g_bar[m], r2, opt.solver);
        ls.lambda[i] = lam;
        u[i].push_back(um);
      }
      const LocalView view(mdl, m);
      const Mat2 F = own_fim(ls, view);
      Vown[m] = F - 1e-9 * F.trace() * Mat2::Identity();
    }
    for (int m = 0; m < M; ++m) {
      LocalState& ls = st.local[m];
      for (int i = 0; i < kStages; ++i) {
        for (int k = 0; k < K; ++k) {
          double ebar = 0.0, tbar = 0.0;
          for (int src = 0; src < M; ++src) {
            if (src == m) continue;
            const int row = K + (m < src ? m : m - 1) * K + k;
            ebar += st.local[src].z(lay.local_offset(Family::e, i) + row);
            tbar += st.local[src].z(lay.local_offset(Family::t, i) + row);
          }
          ls.z(lay.local_offset(Family::e, i) + k) = ebar;
          ls.z(lay.local_offset(Family::t, i) + k) = tbar;
        }
        double ubar = 0.0;
        for (int o = 0; o < M; ++o)
          if (o != m) ubar += u[i][o];
        ls.z(lay.local_offset(Family::u, i)) = ubar;
        ls.z(lay.local_offset(Family::u, i) + 1) = u[i][m];
      }
      Mat2 Vbar = Mat2::Zero();
      for (int o = 0; o < M; ++o)
        if (o != m) Vbar += Vown[o];
      const int vo = lay.local_offset(Family::V, 0);
      ls.z.segment(vo, 6) << Vbar(0, 0), Vbar(0, 1), Vbar(1, 1), Vown[m](0, 0), Vown[m](0, 1), Vown[m](1, 1);
    }
    st.global = RVector::Zero(lay.global_size());
    st.dual.assign(M, RVector::Zero(lay.local_size()));
    update_globals(st, maps);
  }
  for (int m = 0; m < M; ++m) {
    const LocalView view(mdl, m);
    const BlockReport r = update_local_block2(m, st, view, opt);
    if (!r.ok) throw Infeasible("decentralized init: leakage certificate failed at BS " + std::to_string(m) + " (" +
                                r.failed_tag + ")");
  }
  double p = 0.0;
  for (const auto& ls : st.local) p += local_power(ls, mdl.tau);
  st.objective_history.push_back(p * mdl.power_unit);
  return st;
}

namespace {

void write_trace(std::ostream& os, const ConsensusState& st, const NormalizedModel& mdl, double residual) {
  nlohmann::json j;
  j["iter"] = st.iterations;
  j["objective_W"] = st.objective_history.back();
  std::vector<double> per_bs;
  for (const auto& ls : st.local) per_bs.push_back(local_power(ls, mdl.tau) * mdl.power_unit);
  j["per_bs_power_W"] = per_bs;
  j["residual"] = residual;
  if (mdl.M > 1) j["residual_family"] = family_residuals(st, SelectionMaps::build(mdl.M, mdl.K));
  j["rho"] = st.rho;
  Mat2 F = Mat2::Zero();
  for (int m = 0; m < mdl.M; ++m) F += own_fim(st.local[m], LocalView(mdl, m));
  const FisherBlock fb = FisherBlock::from_information(F, FisherKind::fused);
  j["trQ_fused"] = fb.trace_crb();
  std::vector<double> delta;
  for (const auto& ls : st.local) delta.push_back(ls.delta);
  j["delta"] = delta;
  os << j.dump() << '\n';
}

}  // namespace

DecentralResult run_algorithm2(const Scenario& sc, const DecentralOptions& opt) {
  const NormalizedModel mdl = NormalizedModel::make(sc, opt.power_unit);
  const int M = mdl.M, N = mdl.N, K = mdl.K;
  DecentralResult out;
  ConsensusState& st = out.state;
  st = initialize_consensus(mdl, opt);
  std::optional<SelectionMaps> maps;
  if (M > 1) maps = SelectionMaps::build(M, K);
  std::vector<LocalView> views;
  for (int m = 0; m < M; ++m) views.emplace_back(mdl, m);

  int fallbacks = 0;
  while (st.iterations < opt.max_iter) {
    ++st.iterations;
    const double fraction = 1.0 - opt.init.fallback_power_step * fallbacks;
    bool failed = false;
    for (int m = 0; m < M && !failed; ++m) {
      const LocalState saved = st.local[m];
      const BlockReport r1 = update_local_block1(m, st, views[m], maps ? &*maps : nullptr, opt, fraction);
      BlockReport r2;
      if (r1.ok) r2 = update_local_block2(m, st, views[m], opt);
      if (!r1.ok || !r2.ok) {
        st.local[m] = saved;
        failed = true;
      }
    }
    double residual = 0.0;
    if (maps) {
      update_globals(st, *maps);
      update_duals(st, *maps);
      residual = consensus_residual(st, *maps);
      for (auto& r : st.rho) r = std::min(r * opt.rho_scale, opt.rho_cap);
      for (const auto& msg : iteration_messages(st.iterations, M, K)) {
        out.messages.push_back(msg);
        if (opt.messages) {
          nlohmann::json j{{"iter", msg.iter}, {"bs_id", msg.bs}, {"payload_kind", msg.kind},
                           {"scalar_count", msg.scalars}};
          *opt.messages << j.dump() << '\n';
        }
      }
    }
    st.residual_history.push_back(residual);
    double p = 0.0;
    for (const auto& ls : st.local) p += local_power(ls, mdl.tau);
    st.objective_history.push_back(p * mdl.power_unit);
    if (opt.trace) write_trace(*opt.trace, st, mdl, residual);
    if (failed) {
      if (++fallbacks >= opt.init.max_fallbacks) {
        st.status = "nonconvergent";
        break;
      }
      continue;
    }
    const double prev = st.objective_history[st.objective_history.size() - 2];
    const double cur = st.objective_history.back();
    const double change = prev > 0.0 ? std::abs(cur - prev) / prev : std::abs(cur - prev);
    if (st.iterations >= 2 && change <= opt.eps2 && residual <= opt.residual_tol) {
      st.converged = true;
      st.status = "converged";
      break;
    }
  }
  if (!st.converged && st.status == "running") st.status = "iteration_limit";

  out.solution = mdl.to_watts(assemble_solution(st, M, N, K));
  if (opt.recover) out.recovery = recover_rank_one(out.solution, sc);
  return out;
}

}  // namespace isac
