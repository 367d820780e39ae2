#include "isac/central_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <json.hpp>

#include "detail/builders.hpp"

namespace isac {

using conic::LinearExpr;
using conic::Program;
using detail::CovarianceVars;
using detail::MatrixSlot;
using detail::ScalarSlot;
using detail::all_bs;
using detail::load_epigraph;
using detail::r_slots;
using detail::r_values;
using detail::stacked_g;
using detail::stage1_fim;
using detail::usable;

Auxiliaries Auxiliaries::filled(int M, int K, double xi, double eta) {
  Auxiliaries a;
  for (int i = 0; i < kStages; ++i) {
    a.xi[i].assign(M, std::vector<double>(K, xi));
    a.eta[i].assign(M, std::vector<double>(K, eta));
  }
  return a;
}

double state_power_watts(const BcdState& st, const NormalizedModel& mdl) {
  double p = 0.0;
  for (int m = 0; m < mdl.M; ++m) p += detail::power_value(st.X, m, mdl.tau);
  return p * mdl.power_unit;
}

namespace {

BlockReport report_from(const conic::SolveResult& r, bool ok) {
  BlockReport b;
  b.ok = ok;
  b.status = r.status;
  b.failed_tag = r.failed_tag;
  b.max_violation = r.max_violation;
  b.newton_steps = r.newton_steps;
  return b;
}

void add_power_terms(Program& p, const CovarianceVars& v, const NormalizedModel& mdl, double power_fraction) {
  LinearExpr obj;
  for (int m = 0; m < mdl.M; ++m) {
    const LinearExpr pm = detail::power_expr(v, m, mdl.tau);
    obj += pm;
    p.add_linear(pm - LinearExpr(power_fraction * mdl.p_max), "C1[" + std::to_string(m) + "]");
  }
  p.set_objective(obj);
}

std::string user_tag(const char* name, int i, int m, int k) {
  return std::string(name) + "[" + std::to_string(i) + "," + std::to_string(m) + "," + std::to_string(k) + "]";
}

struct InitAttempt {
  bool ok = false;
  BcdState state;
  conic::SolveResult res;
};

// Stage-1 share of the rate target and of the leakage budget; stage 2 takes the rest.
struct StageSplit {
  double rate1 = 1.0, leak1 = 1.0;
};

InitAttempt try_initialize(const NormalizedModel& mdl, const CentralOptions& opt, double scale, StageSplit split) {
  InitAttempt out;
  const int M = mdl.M, N = mdl.N, K = mdl.K;
  std::vector<double> delta(M);
  double delta0 = 0.0;
  double tr_cap = std::numeric_limits<double>::infinity();
  for (int m = 0; m < M; ++m) {
    const CrbCoupling& c = mdl.coupling[m];
    if (opt.fixed_mse) {
      delta[m] = c.radius(*opt.fixed_mse) * (1.0 + 1e-6);
      tr_cap = *opt.fixed_mse;
    } else {
      delta[m] = scale * mdl.beta1[m];
      if (!(delta[m] > c.b)) return out;
      if (std::isfinite(c.a)) tr_cap = std::min(tr_cap, c.a * c.a * (delta[m] - c.b) * (delta[m] - c.b));
    }
    delta0 += delta[m] * delta[m];
  }
  delta0 *= 1.0 + 1e-6;

  std::array<double, kStages> gamma{}, xi{};
  {
    const double r1 = split.rate1 * mdl.rate_target, l1 = split.leak1 * mdl.leak_target;
    const std::array<double, kStages> rate{r1, (mdl.rate_target - mdl.tau[0] * r1) / mdl.tau[1]};
    const std::array<double, kStages> leak{l1, (mdl.leak_target - mdl.tau[0] * l1) / mdl.tau[1]};
    for (int i = 0; i < kStages; ++i) {
      gamma[i] = std::exp2(rate[i] * (1.0 + opt.init_rate_margin)) - 1.0;
      xi[i] = std::exp2(leak[i] * (1.0 - opt.init_leak_margin)) - 1.0;
    }
  }

  Program p;
  const CovarianceVars v = CovarianceVars::add(p, M, N, K, all_bs(M));
  add_power_terms(p, v, mdl, 1.0);
  const CVector g = stacked_g(mdl);
  std::array<std::vector<std::vector<int>>, kStages> eta_idx;
  for (int i = 0; i < kStages; ++i) {
    eta_idx[i].assign(M, std::vector<int>(K));
    const double r2 = i == 0 ? mdl.stacked_beta1_sq() : delta0;
    for (int m = 0; m < M; ++m)
      for (int k = 0; k < K; ++k) {
        p.add_linear(detail::interference_expr(v, mdl, i, m, k) * gamma[i] - detail::signal_expr(v, mdl, i, m, k),
                     user_tag("sinr", i, m, k));
        const int e = p.add_scalar(user_tag("eta", i, m, k));
        eta_idx[i][m][k] = e;
        p.add_linear(-LinearExpr::variable(e), user_tag("eta>=0", i, m, k));
        p.add_lmi(detail::s_procedure_affine({&v.W[i][m][k], {}}, m, r_slots(v, i), {-1, xi[i]}, {e, 0.0},
                                             LinearExpr(r2), LinearExpr(), g),
                  user_tag("C5", i, m, k));
      }
  }
  int t_idx = -1;
  if (std::isfinite(tr_cap)) {
    t_idx = p.num_variables();
    const LinearExpr trT = detail::add_trace_inverse_epigraph(p, detail::fim_expr(v, mdl.fim), "C7.epigraph");
    p.add_linear(trT - LinearExpr(tr_cap), "C7");
  }

  RVector x0 = RVector::Zero(p.num_variables());
  BeamformingSolution X0 = BeamformingSolution::zeros(M, N, K);
  const double p0 = 0.01 * mdl.p_max / (N * (K + 1));
  for (int i = 0; i < kStages; ++i)
    for (int m = 0; m < M; ++m) {
      for (int k = 0; k < K; ++k) X0.W[i][m][k] = CMatrix::Identity(N, N) * p0;
      X0.R[i][m] = CMatrix::Identity(N, N) * p0;
    }
  v.load(X0, x0);
  for (int i = 0; i < kStages; ++i)
    for (int m = 0; m < M; ++m)
      for (int k = 0; k < K; ++k) x0(eta_idx[i][m][k]) = 1.0;
  if (t_idx >= 0) load_epigraph(stage1_fim(X0, mdl.fim), t_idx, x0);

  out.res = conic::solve(p, x0, opt.solver);
  if (!usable(out.res, p)) return out;

  BcdState& st = out.state;
  st.X = BeamformingSolution::zeros(M, N, K);
  v.extract(out.res.x, st.X);
  st.delta = delta;
  st.delta0 = delta0;
  st.aux = Auxiliaries::filled(M, K, 0.0, 0.0);
  for (int i = 0; i < kStages; ++i)
    for (int m = 0; m < M; ++m)
      for (int k = 0; k < K; ++k) {
        st.aux.xi[i][m][k] = xi[i];
        st.aux.eta[i][m][k] = out.res.x(eta_idx[i][m][k]);
      }
  out.ok = true;
  return out;
}

}  // namespace

BcdState initialize_central(const NormalizedModel& mdl, const CentralOptions& opt) {
  std::string last;
  for (StageSplit split : {StageSplit{1.0, 1.0}, StageSplit{0.5, 0.5}, StageSplit{0.5, 0.2}, StageSplit{0.2, 0.2},
                           StageSplit{0.2, 0.05}})
    for (double scale : {1.0, 2.0, 0.5, 4.0, 0.25}) {
      InitAttempt a = try_initialize(mdl, opt, scale, split);
      if (a.ok) {
        a.state.objective_history.push_back(state_power_watts(a.state, mdl));
        return a.state;
      }
      last = a.res.failed_tag;
      if (opt.fixed_mse) break;
    }
  throw Infeasible("initialization infeasible after retries (last failing family: " +
                   (last.empty() ? std::string("coupling") : last) + ")");
}

BlockReport solve_block1(BcdState& st, const NormalizedModel& mdl, const CentralOptions& opt, double power_fraction) {
  const int M = mdl.M, N = mdl.N, K = mdl.K;
  Program p;
  const CovarianceVars v = CovarianceVars::add(p, M, N, K, all_bs(M));
  add_power_terms(p, v, mdl, power_fraction);

  const int d0 = p.add_scalar("delta0");
  std::vector<int> dm(M);
  for (int m = 0; m < M; ++m) dm[m] = p.add_scalar("delta" + std::to_string(m));

  // C2 surrogate
  for (int m = 0; m < M; ++m)
    for (int k = 0; k < K; ++k) {
      LinearExpr lin(mdl.rate_target);
      std::vector<std::pair<double, LinearExpr>> logs;
      for (int i = 0; i < kStages; ++i) {
        const RateSurrogate s = rate_surrogate(st.X, mdl, i, m, k);
        lin += detail::rate_surrogate_expr(s, v) * mdl.tau[i];
        logs.emplace_back(mdl.tau[i] / std::numbers::ln2,
                          detail::interference_expr(v, mdl, i, m, k) + detail::signal_expr(v, mdl, i, m, k));
      }
      p.add_smooth(std::make_shared<conic::LogSumConstraint>(lin, logs), user_tag("C2", 0, m, k));
    }

  // C5a / C5b
  const CVector g = stacked_g(mdl);
  for (int i = 0; i < kStages; ++i) {
    const LinearExpr r2 = i == 0 ? LinearExpr(mdl.stacked_beta1_sq()) : LinearExpr::variable(d0);
    for (int m = 0; m < M; ++m)
      for (int k = 0; k < K; ++k)
        p.add_lmi(detail::s_procedure_affine({&v.W[i][m][k], {}}, m, r_slots(v, i), {-1, st.aux.xi[i][m][k]},
                                             {-1, st.aux.eta[i][m][k]}, r2, LinearExpr(), g),
                  user_tag("C5", i, m, k));
  }

  // C6: delta0 >= sum delta_m^2
  {
    std::vector<std::pair<double, LinearExpr>> sq;
    for (int m = 0; m < M; ++m) sq.emplace_back(1.0, LinearExpr::variable(dm[m]));
    p.add_smooth(std::make_shared<conic::QuadraticConstraint>(-LinearExpr::variable(d0), sq), "C6");
  }

  // C7 surrogate
  bool need_epigraph = false;
  for (const auto& c : mdl.coupling) need_epigraph |= std::isfinite(c.a);
  need_epigraph |= opt.fixed_mse.has_value();
  int t_idx = -1;
  LinearExpr trT;
  if (need_epigraph) {
    t_idx = p.num_variables();
    trT = detail::add_trace_inverse_epigraph(p, detail::fim_expr(v, mdl.fim), "C7.epigraph");
  }
  if (opt.fixed_mse) p.add_linear(trT - LinearExpr(*opt.fixed_mse), "C7.mse");
  for (int m = 0; m < M; ++m) {
    const CrbCoupling& c = mdl.coupling[m];
    const std::string tag = "C7[" + std::to_string(m) + "]";
    if (opt.fixed_mse) {
      p.add_linear(LinearExpr(c.radius(*opt.fixed_mse)) - LinearExpr::variable(dm[m]), tag);
      continue;
    }
    if (!std::isfinite(c.a)) {
      p.add_linear(LinearExpr(c.b) - LinearExpr::variable(dm[m]), tag);
      continue;
    }
    const CrbCouplingSurrogate s = crb_coupling_constraint(st.delta[m], c);
    // rhs is affine in delta: rhs(0) + slope * delta
    const double r0 = s.rhs(0.0), slope = s.rhs(1.0) - r0;
    p.add_linear(trT - LinearExpr(r0) - LinearExpr::variable(dm[m]) * slope, tag);
  }

  RVector x0 = RVector::Zero(p.num_variables());
  v.load(st.X, x0);
  x0(d0) = st.delta0;
  for (int m = 0; m < M; ++m) x0(dm[m]) = st.delta[m];
  if (t_idx >= 0) load_epigraph(stage1_fim(st.X, mdl.fim), t_idx, x0);

  const conic::SolveResult r = conic::solve(p, x0, opt.solver);
  const bool ok = usable(r, p) && p.objective_value(r.x) <= p.objective_value(x0) + 1e-6 * (1.0 + std::abs(p.objective_value(x0)));
  BlockReport rep = report_from(r, ok);
  rep.max_violation = p.max_violation(r.x).first;
  if (!ok) {
    if (rep.failed_tag.empty()) rep.failed_tag = p.max_violation(r.x).second;
    return rep;
  }
  v.extract(r.x, st.X);
  st.delta0 = r.x(d0);
  for (int m = 0; m < M; ++m) st.delta[m] = r.x(dm[m]);
  return rep;
}

BlockReport solve_block2(BcdState& st, const NormalizedModel& mdl, const CentralOptions& opt) {
  const int M = mdl.M, K = mdl.K;
  const CVector g = stacked_g(mdl);
  Auxiliaries next = st.aux;
  BlockReport total;
  total.ok = true;
  total.status = conic::SolveStatus::optimal;
  for (int m = 0; m < M; ++m)
    for (int k = 0; k < K; ++k) {
      Program p;
      std::array<int, kStages> xi{}, eta{};
      std::array<double, kStages> xi_prev{};
      for (int i = 0; i < kStages; ++i) {
        xi[i] = p.add_scalar(user_tag("xi", i, m, k));
        eta[i] = p.add_scalar(user_tag("eta", i, m, k));
        xi_prev[i] = st.aux.xi[i][m][k];
        p.add_linear(-LinearExpr::variable(xi[i]), user_tag("xi>=0", i, m, k));
        p.add_linear(-LinearExpr::variable(eta[i]), user_tag("eta>=0", i, m, k));
      }
      const LeakageSurrogate ls = leakage_surrogate(xi_prev, mdl.tau);
      LinearExpr obj, c3(ls.exact(xi_prev) - mdl.leak_target);
      for (int i = 0; i < kStages; ++i) {
        const double w = mdl.tau[i] * ls.slope(i);
        obj += LinearExpr::variable(xi[i]) * w;
        c3 += (LinearExpr::variable(xi[i]) - LinearExpr(xi_prev[i])) * w;
        const LinearExpr r2(i == 0 ? mdl.stacked_beta1_sq() : st.delta0);
        p.add_lmi(detail::s_procedure_affine({nullptr, st.X.W[i][m][k]}, m, r_values(st.X, i), {xi[i], 0.0},
                                             {eta[i], 0.0}, r2, LinearExpr(), g),
                  user_tag("C5", i, m, k));
      }
      p.add_linear(c3, user_tag("C3", 0, m, k));
      p.set_objective(obj);

      RVector x0(p.num_variables());
      for (int i = 0; i < kStages; ++i) {
        x0(xi[i]) = st.aux.xi[i][m][k];
        x0(eta[i]) = st.aux.eta[i][m][k];
      }
      const conic::SolveResult r = conic::solve(p, x0, opt.solver);
      const bool ok = usable(r, p);
      total.newton_steps += r.newton_steps;
      total.max_violation = std::max(total.max_violation, p.max_violation(r.x).first);
      if (!ok) {
        BlockReport rep = report_from(r, false);
        if (rep.failed_tag.empty()) rep.failed_tag = p.max_violation(r.x).second;
        return rep;
      }
      for (int i = 0; i < kStages; ++i) {
        next.xi[i][m][k] = r.x(xi[i]);
        next.eta[i][m][k] = r.x(eta[i]);
      }
    }
  st.aux = next;
  return total;
}

double eigen_ratio(const CMatrix& W) {
  const double tr = W.trace().real();
  if (!(tr > 0.0)) return 1.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(W);
  return es.eigenvalues().maxCoeff() / tr;
}

CVector principal_beamformer(const CMatrix& W) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(W);
  const int n = static_cast<int>(W.rows());
  const double l = std::max(es.eigenvalues()(n - 1), 0.0);
  return es.eigenvectors().col(n - 1) * std::sqrt(l);
}

namespace {

/// C2 for every user and C3 for user (m,k), evaluated on the vectors in sol.
bool candidate_ok(const BeamformingSolution& sol, const Scenario& sc, int m, int k, const AuditOptions& opt) {
  const BeamformingSolution cov = covariances_from_vectors(sol);
  for (int mm = 0; mm < sc.M(); ++mm)
    for (int kk = 0; kk < sc.K(); ++kk) {
      std::array<double, kStages> s{};
      for (int i = 0; i < kStages; ++i) s[i] = sinr_user(cov, sc, i, mm, kk);
      if (achievable_rate_from_sinr(s, sc.config.tau) < sc.config.R_info - opt.rate_tol) return false;
    }
  const UncertaintyModel um = UncertaintyModel::make(sc, sc.config.Q1);
  const std::array<std::vector<double>, kStages> radii{
      um.beta_g[0], opt.stage2_radii ? *opt.stage2_radii : central_stage2_radii(cov, sc)};
  double leak = 0.0;
  for (int i = 0; i < kStages; ++i)
    leak += sc.tau(i) *
            worst_case_leakage_oracle(cov, sc.channels.g_bar, radii[i], sc.noise_eve_w, i, m, k, opt.oracle);
  return leak <= sc.config.R_leak + opt.leak_tol;
}

}  // namespace

RecoveryReport recover_rank_one(BeamformingSolution& sol, const Scenario& sc, const RecoveryOptions& opt) {
  const int M = sc.M(), K = sc.K(), N = sc.N();
  RecoveryReport rep;
  rep.power_before = total_power(sol, sc).total;
  std::array<std::vector<std::vector<CVector>>, kStages> w;
  std::vector<std::array<int, 3>> pending;
  for (int i = 0; i < kStages; ++i) {
    w[i].assign(M, std::vector<CVector>(K));
    for (int m = 0; m < M; ++m)
      for (int k = 0; k < K; ++k) {
        const CMatrix& W = sol.W[i][m][k];
        const double r = eigen_ratio(W);
        rep.min_eigen_ratio = std::min(rep.min_eigen_ratio, r);
        w[i][m][k] = principal_beamformer(W);
        if (r < opt.principal_threshold) pending.push_back({i, m, k});
      }
  }
  sol.w = w;
  rep.randomized = static_cast<int>(pending.size());

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  for (const auto& [i, m, k] : pending) {
    const CMatrix& W = sol.W[i][m][k];
    Eigen::SelfAdjointEigenSolver<CMatrix> es(W);
    const CMatrix root = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    const CVector& h = sc.channels.h[m][m][k];
    const double target = (h.adjoint() * W * h)(0, 0).real();
    double best_power = std::numeric_limits<double>::infinity();
    CVector best;
    for (int d = 0; d < opt.draws; ++d) {
      CVector z(N);
      for (int n = 0; n < N; ++n) z(n) = Complex(normal(rng), normal(rng));
      CVector cand = root * z;
      const double got = std::norm(h.dot(cand));
      if (!(got > 0.0)) continue;
      cand *= std::sqrt(target / got);
      const double pw = cand.squaredNorm();
      if (pw >= best_power) continue;
      (*sol.w)[i][m][k] = cand;
      if (candidate_ok(sol, sc, m, k, opt.audit)) {
        best_power = pw;
        best = cand;
      }
    }
    (*sol.w)[i][m][k] = std::isfinite(best_power) ? best : w[i][m][k];
  }

  AuditOptions full = opt.audit;
  full.use_vectors = true;
  rep.feasible = audit_solution(sol, sc, full).passed();
  rep.power_after = total_power(covariances_from_vectors(sol), sc).total;
  return rep;
}

namespace {

void write_trace(std::ostream& os, const BcdState& st, const NormalizedModel& mdl, const BlockReport& b1,
                 const BlockReport& b2) {
  nlohmann::json j;
  j["iter"] = st.iterations;
  j["objective_W"] = st.objective_history.back();
  std::vector<double> per_bs;
  for (int m = 0; m < mdl.M; ++m) per_bs.push_back(detail::power_value(st.X, m, mdl.tau) * mdl.power_unit);
  j["per_bs_power_W"] = per_bs;
  const FisherBlock fb = FisherBlock::from_information(stage1_fim(st.X, mdl.fim), FisherKind::centralized);
  j["trQ_central"] = fb.trace_crb();
  std::vector<double> xi;
  for (int i = 0; i < kStages; ++i)
    for (const auto& row : st.aux.xi[i])
      for (double x : row) xi.push_back(x);
  j["xi"] = xi;
  j["delta"] = st.delta;
  j["delta0"] = st.delta0;
  double c6 = -st.delta0;
  for (double d : st.delta) c6 += d * d;
  j["residuals"] = {{"block1_max_violation", b1.max_violation},
                    {"block2_max_violation", b2.max_violation},
                    {"C6", c6}};
  j["block1_status"] = conic::to_string(b1.status);
  j["block2_status"] = conic::to_string(b2.status);
  j["newton_steps"] = {b1.newton_steps, b2.newton_steps};
  j["fallbacks"] = st.fallbacks;
  os << j.dump() << '\n';
}

}  // namespace

CentralResult run_algorithm1(const Scenario& sc, const CentralOptions& opt) {
  const NormalizedModel mdl = NormalizedModel::make(sc, opt.power_unit);
  CentralResult out;
  BcdState& st = out.state;
  st = initialize_central(mdl, opt);

  while (st.iterations < opt.max_iter) {
    ++st.iterations;
    const double fraction = 1.0 - opt.fallback_power_step * st.fallbacks;
    BlockReport b1 = solve_block1(st, mdl, opt, fraction);
    BlockReport b2;
    if (b1.ok) b2 = solve_block2(st, mdl, opt);
    if (!b1.ok || !b2.ok) {
      ++st.fallbacks;
      st.objective_history.push_back(st.objective_history.back());
      if (opt.trace) write_trace(*opt.trace, st, mdl, b1, b2);
      if (st.fallbacks >= opt.max_fallbacks) {
        st.status = "nonconvergent";
        break;
      }
      continue;
    }
    st.objective_history.push_back(state_power_watts(st, mdl));
    if (opt.trace) write_trace(*opt.trace, st, mdl, b1, b2);
    const double prev = st.objective_history[st.objective_history.size() - 2];
    const double cur = st.objective_history.back();
    const double change = prev > 0.0 ? std::abs(cur - prev) / prev : std::abs(cur - prev);
    if (change <= opt.eps1) {
      st.converged = true;
      st.status = "converged";
      break;
    }
  }
  if (!st.converged && st.status == "running") st.status = "iteration_limit";

  out.solution = mdl.to_watts(st.X);
  if (opt.recover) out.recovery = recover_rank_one(out.solution, sc);
  return out;
}

}  // namespace isac
