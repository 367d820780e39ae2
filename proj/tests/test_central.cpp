#include <cmath>
#include <random>

#include "approx.hpp"
#include "isac/central_opt.hpp"
#include "isac/sensing.hpp"

using namespace isac;

namespace {

Scenario desk(std::uint64_t seed, double R_info = 3.0, int N = 3) {
  SystemConfig c = SystemConfig::desk_default();
  c.rng_seed = seed;
  c.R_info = R_info;
  c.N = N;
  return build_scenario(c);
}

double xi_sum(const BcdState& st) {
  double s = 0.0;
  for (const auto& stage : st.aux.xi)
    for (const auto& bs : stage)
      for (double x : bs) s += x;
  return s;
}

}  // namespace

TEST_CASE("Algorithm 1 descends and converges on a desk scenario") {
  const Scenario sc = desk(1);
  const CentralResult r = run_algorithm1(sc);
  const auto& f = r.state.objective_history;
  REQUIRE(f.size() >= 2);
  for (size_t n = 1; n < f.size(); ++n) CHECK(f[n] <= f[n - 1] * (1 + 1e-6));
  CHECK(r.state.converged);
  CHECK(r.state.iterations < 30);
  CHECK(f.back() < f.front());

  const AuditReport a = audit_solution(r.solution, sc);
  CHECK(a.power_ok);
  CHECK(a.rate_ok);
  CHECK(a.leak_ok);
  CHECK(a.min_rate_margin >= -1e-3);
  CHECK(a.max_leak_excess <= 1e-3);
  for (double p : total_power(r.solution, sc).per_bs) CHECK(p <= sc.P_max_w + 1e-9);

  // delta audit against the radii the stage-1 FIM implies
  const NormalizedModel mdl = NormalizedModel::make(sc);
  const auto radii = mdl.stage2_radii(centralized_fim(mdl.to_watts(r.state.X), sc).F);
  CHECK(delta_consistency(r.state.delta, r.state.delta0, radii, 1e-6 * r.state.delta0));
}

TEST_CASE("one BCD sweep with max_iter = 1") {
  const Scenario sc = desk(3);
  CentralOptions opt;
  opt.max_iter = 1;
  const CentralResult r = run_algorithm1(sc, opt);
  CHECK(r.state.iterations == 1);
  CHECK(r.state.objective_history.size() == 2);
  CHECK(r.state.objective_history[1] <= r.state.objective_history[0] * (1 + 1e-6));
  CHECK(is_valid_solution(r.solution, 1e-2));
}

TEST_CASE("more antennas do not cost power") {
  const double p3 = run_algorithm1(desk(1, 3.0, 3)).state.objective_history.back();
  const double p4 = run_algorithm1(desk(1, 3.0, 4)).state.objective_history.back();
  CHECK(p4 <= p3);
}

TEST_CASE("block steps") {
  const Scenario sc = desk(5);
  const NormalizedModel mdl = NormalizedModel::make(sc);
  const BcdState init = initialize_central(mdl);

  SUBCASE("block 1 does not increase power") {
    BcdState st = init;
    const double before = state_power_watts(st, mdl);
    const BlockReport rep = solve_block1(st, mdl);
    REQUIRE(rep.ok);
    CHECK(state_power_watts(st, mdl) <= before * (1 + 1e-6));
  }
  SUBCASE("block 2 lowers the leakage auxiliaries") {
    BcdState st = init;
    REQUIRE(solve_block1(st, mdl).ok);
    const double before = xi_sum(st);
    REQUIRE(solve_block2(st, mdl).ok);
    CHECK(xi_sum(st) <= before + 1e-9);
    for (const auto& stage : st.aux.eta)
      for (const auto& bs : stage)
        for (double e : bs) CHECK(e >= 0.0);
  }
  SUBCASE("block 2 with no information beams drives xi to zero") {
    BcdState st = init;
    for (auto& stage : st.X.W)
      for (auto& bs : stage)
        for (auto& W : bs) W.setZero();
    REQUIRE(solve_block2(st, mdl).ok);
    for (const auto& stage : st.aux.xi)
      for (const auto& bs : stage)
        for (double x : bs) CHECK(x <= 1e-6);
  }
  SUBCASE("a tighter budget never violates C1") {
    BcdState st = init;
    double top = 0.0;
    for (double p : total_power(st.X, mdl.tau).per_bs) top = std::max(top, p);
    const double fraction = 0.9 * top / mdl.p_max;
    const BcdState keep = st;
    const BlockReport rep = solve_block1(st, mdl, {}, fraction);
    if (rep.ok) {
      for (double p : total_power(st.X, mdl.tau).per_bs) CHECK(p <= fraction * mdl.p_max * (1 + 1e-6));
    } else {
      CHECK(state_power_watts(st, mdl) == state_power_watts(keep, mdl));
    }
  }
}

TEST_CASE("no rate requirement lets the power collapse") {
  SystemConfig c = SystemConfig::desk_default();
  c.R_info = 0.0;
  c.R_leak = 10.0;
  const Scenario sc = build_scenario(c);
  const CentralResult r = run_algorithm1(sc);
  const auto& f = r.state.objective_history;
  for (size_t n = 1; n < f.size(); ++n) CHECK(f[n] <= f[n - 1] * (1 + 1e-6));
  // only the sensing floor keeps stage-1 power above zero
  CHECK(f.back() < 0.2 * f.front());
  CHECK(f.back() < 1e-3 * sc.P_max_w * sc.M());
  CHECK(f.back() < run_algorithm1(desk(1)).state.objective_history.back());
}

TEST_CASE("an infeasible scenario is reported") {
  CHECK_THROWS_AS(run_algorithm1(desk(9, 5.0)), Infeasible);
}

TEST_CASE("fixed sensing target for Algorithm 1") {
  const Scenario sc = desk(1);
  const double adaptive = centralized_fim(run_algorithm1(sc).solution, sc).trace_crb();
  CentralOptions opt;
  opt.fixed_mse = 0.5 * adaptive;
  const CentralResult r = run_algorithm1(sc, opt);
  CHECK(centralized_fim(r.solution, sc).trace_crb() <= opt.fixed_mse.value() * (1 + 1e-6));
  AuditOptions ao;
  const NormalizedModel mdl = NormalizedModel::make(sc);
  std::vector<double> radii;
  for (const auto& c : mdl.coupling) radii.push_back(c.radius(*opt.fixed_mse) / mdl.g_scale);
  ao.stage2_radii = radii;
  CHECK(audit_solution(r.solution, sc, ao).passed());
}

TEST_CASE("rank-one recovery") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  CVector w0(3);
  for (int n = 0; n < 3; ++n) w0(n) = Complex(nd(rng), nd(rng));
  const CMatrix W = w0 * w0.adjoint();
  CHECK(eigen_ratio(W) == approx(1.0));
  const CVector w = principal_beamformer(W);
  const Complex phase = w.dot(w0) / std::abs(w.dot(w0));
  CHECK((w * phase - w0).norm() < 1e-12 * w0.norm());

  CHECK(eigen_ratio(CMatrix::Identity(2, 2)) == approx(0.5));
  CHECK(eigen_ratio(CMatrix::Zero(2, 2)) == 1.0);

  // force the randomized path on a converged design
  const Scenario sc = desk(1);
  BeamformingSolution sol = run_algorithm1(sc).solution;
  CMatrix& Wr = sol.W[1][0][0];
  Wr = CMatrix::Identity(3, 3) * (Wr.trace().real() / 3.0) * 3.0;
  const RecoveryReport rep = recover_rank_one(sol, sc);
  CHECK(rep.randomized >= 1);
  CHECK(rep.min_eigen_ratio <= 1.0 / 3.0 + 1e-12);
  REQUIRE(sol.w.has_value());
  CHECK((*sol.w)[1][0][0].size() == 3);
  if (rep.feasible) {
    AuditOptions ao;
    ao.use_vectors = true;
    CHECK(audit_solution(sol, sc, ao).passed());
  }
}
