#include "isac/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "detail/builders.hpp"
#include "isac/sensing.hpp"

namespace isac {

using conic::LinearExpr;
using conic::Program;
using detail::CovarianceVars;

void BaselineConfig::validate() const {
  if (scheme == BaselineScheme::fixed_sensing && !(fixed_mse_target > 0.0))
    throw ConfigError("fixed_sensing baseline needs fixed_mse_target > 0");
  if (scheme == BaselineScheme::separated_two_stage && !(stage1_power_fraction > 0.0))
    throw ConfigError("stage1_power_fraction must be positive");
}

namespace {

std::string tag(const char* name, int m, int k) {
  return std::string(name) + "[" + std::to_string(m) + "," + std::to_string(k) + "]";
}

BeamformingSolution initial_guess(int M, int N, int K, int stage, double p) {
  BeamformingSolution X = BeamformingSolution::zeros(M, N, K);
  for (int m = 0; m < M; ++m) {
    for (int k = 0; k < K; ++k) X.W[stage][m][k] = CMatrix::Identity(N, N) * p;
    X.R[stage][m] = CMatrix::Identity(N, N) * p;
  }
  return X;
}

// smallest xi certified by the stage-0 S-procedure at fixed covariances
double certified_xi(const BeamformingSolution& X, const NormalizedModel& mdl, int m, int k, double r2, double xi0,
                    const conic::SolverOptions& so) {
  Program p;
  const int xi = p.add_scalar("xi"), eta = p.add_scalar("eta");
  p.add_linear(-LinearExpr::variable(xi), "xi>=0");
  p.add_linear(-LinearExpr::variable(eta), "eta>=0");
  p.add_lmi(detail::s_procedure_affine({nullptr, X.W[0][m][k]}, m, detail::r_values(X, 0), {xi, 0.0}, {eta, 0.0},
                                       LinearExpr(r2), LinearExpr(), detail::stacked_g(mdl)),
            "C5");
  p.set_objective(LinearExpr::variable(xi));
  RVector x0(2);
  x0 << xi0, 1.0;
  const conic::SolveResult r = conic::solve(p, x0, so);
  return detail::usable(r, p) ? std::min(r.x(xi), xi0) : xi0;
}

}  // namespace

Baseline1Result run_baseline1(const Scenario& sc, const Baseline1Options& opt) {
  const NormalizedModel mdl = NormalizedModel::make(sc, opt.power_unit);
  const int M = mdl.M, N = mdl.N, K = mdl.K;
  const CVector g = detail::stacked_g(mdl);
  const double gamma_full = std::exp2(mdl.rate_target) - 1.0;
  const double xi_full = std::exp2(mdl.leak_target) - 1.0;
  const double r2_1 = mdl.stacked_beta1_sq();

  // stage 1: best sensing
  BeamformingSolution X = BeamformingSolution::zeros(M, N, K);
  {
    Program p;
    const CovarianceVars v = CovarianceVars::add(p, M, N, K, detail::all_bs(M), {true, false});
    for (int m = 0; m < M; ++m) {
      LinearExpr pm;
      for (const auto& W : v.W[0][m]) pm += conic::trace(W);
      pm += conic::trace(v.R[0][m]);
      p.add_linear(pm - LinearExpr(opt.stage1_power_fraction * mdl.p_max), "C1[" + std::to_string(m) + "]");
    }
    for (int m = 0; m < M; ++m)
      for (int k = 0; k < K; ++k) {
        p.add_linear(detail::interference_expr(v, mdl, 0, m, k) * gamma_full - detail::signal_expr(v, mdl, 0, m, k),
                     tag("sinr", m, k));
        const int e = p.add_scalar(tag("eta", m, k));
        p.add_linear(-LinearExpr::variable(e), tag("eta>=0", m, k));
        p.add_lmi(detail::s_procedure_affine({&v.W[0][m][k], {}}, m, detail::r_slots(v, 0), {-1, xi_full}, {e, 0.0},
                                             LinearExpr(r2_1), LinearExpr(), g),
                  tag("C5", m, k));
      }
    const int t_idx = p.num_variables();
    p.set_objective(detail::add_trace_inverse_epigraph(p, detail::fim_expr(v, mdl.fim), "trQ"));

    RVector x0 = RVector::Ones(p.num_variables());
    const BeamformingSolution X0 = initial_guess(M, N, K, 0, 0.01 * mdl.p_max / (N * (K + 1)));
    v.load(X0, x0);
    detail::load_epigraph(detail::stage1_fim(X0, mdl.fim), t_idx, x0);
    const conic::SolveResult r = conic::solve(p, x0, opt.solver);
    if (!detail::usable(r, p)) throw Infeasible("baseline 1 stage 1 infeasible (" + r.failed_tag + ")");
    v.extract(r.x, X);
  }
  Baseline1Result out;
  const Mat2 F1 = detail::stage1_fim(X, mdl.fim);
  out.delta = mdl.stage2_radii(F1);
  double delta0 = 0.0;
  for (double d : out.delta) {
    if (!std::isfinite(d)) throw Infeasible("baseline 1: singular stage-1 FIM");
    delta0 += d * d;
  }

  // stage 2: secure communication with stage 1 frozen
  {
    Program p;
    const CovarianceVars v = CovarianceVars::add(p, M, N, K, detail::all_bs(M), {false, true});
    LinearExpr obj;
    for (int m = 0; m < M; ++m) {
      LinearExpr pm;
      for (const auto& W : v.W[1][m]) pm += conic::trace(W) * mdl.tau[1];
      pm += conic::trace(v.R[1][m]) * mdl.tau[1];
      const double p1 = mdl.tau[0] * X.transmit_covariance(0, m).trace().real();
      p.add_linear(pm - LinearExpr(mdl.p_max - p1), "C1[" + std::to_string(m) + "]");
      obj += pm;
    }
    p.set_objective(obj);
    for (int m = 0; m < M; ++m)
      for (int k = 0; k < K; ++k) {
        const double r1 = std::log2(1.0 + signal_power(X, mdl, 0, m, k) / interference_plus_noise(X, mdl, 0, m, k));
        const double rate2 = std::max(0.0, (mdl.rate_target - mdl.tau[0] * r1) / mdl.tau[1]);
        const double gamma2 = std::exp2(rate2 * (1.0 + 1e-4)) - 1.0;
        p.add_linear(detail::interference_expr(v, mdl, 1, m, k) * gamma2 - detail::signal_expr(v, mdl, 1, m, k),
                     tag("sinr", m, k));
        const double xi1 = certified_xi(X, mdl, m, k, r2_1, xi_full, opt.solver);
        const double leak2 = (mdl.leak_target - mdl.tau[0] * std::log2(1.0 + xi1)) / mdl.tau[1];
        const double xi2 = std::exp2(leak2 * (1.0 - 1e-3)) - 1.0;
        const int e = p.add_scalar(tag("eta", m, k));
        p.add_linear(-LinearExpr::variable(e), tag("eta>=0", m, k));
        p.add_lmi(detail::s_procedure_affine({&v.W[1][m][k], {}}, m, detail::r_slots(v, 1), {-1, xi2}, {e, 0.0},
                                             LinearExpr(delta0), LinearExpr(), g),
                  tag("C5", m, k));
      }
    RVector x0 = RVector::Ones(p.num_variables());
    v.load(initial_guess(M, N, K, 1, 0.01 * mdl.p_max / (N * (K + 1))), x0);
    const conic::SolveResult r = conic::solve(p, x0, opt.solver);
    if (!detail::usable(r, p)) throw Infeasible("baseline 1 stage 2 infeasible (" + r.failed_tag + ")");
    v.extract(r.x, X);
  }

  out.solution = mdl.to_watts(X);
  out.trace_q = centralized_fim(out.solution, sc).trace_crb();
  if (opt.recover) out.recovery = recover_rank_one(out.solution, sc);
  return out;
}

DecentralResult run_baseline2(const Scenario& sc, double mse_target, DecentralOptions opt) {
  if (!(mse_target > 0.0)) throw InvalidArgument("run_baseline2: mse_target must be positive");
  opt.fixed_mse = mse_target;
  return run_algorithm2(sc, opt);
}

std::vector<double> mse_grid(double center, int points, double lo, double hi) {
  if (!(center > 0.0) || points < 1 || !(lo > 0.0) || !(hi >= lo)) throw InvalidArgument("mse_grid: bad range");
  std::vector<double> out(points);
  const double a = std::log(lo * center), b = std::log(hi * center);
  for (int j = 0; j < points; ++j) out[j] = std::exp(points == 1 ? a : a + (b - a) * j / (points - 1));
  return out;
}

}  // namespace isac
