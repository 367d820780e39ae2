#include <cmath>

#include "approx.hpp"
#include "isac/baselines.hpp"
#include "isac/sensing.hpp"

using namespace isac;

namespace {

Scenario desk(std::uint64_t seed, double R_info = 3.0) {
  SystemConfig c = SystemConfig::desk_default();
  c.rng_seed = seed;
  c.R_info = R_info;
  return build_scenario(c);
}

std::vector<double> physical_radii(const Scenario& sc, const std::vector<double>& normalized) {
  const NormalizedModel mdl = NormalizedModel::make(sc);
  std::vector<double> out;
  for (double d : normalized) out.push_back(d / mdl.g_scale);
  return out;
}

}  // namespace

TEST_CASE("baseline config validation") {
  BaselineConfig c;
  CHECK_NOTHROW(c.validate());
  c.scheme = BaselineScheme::fixed_sensing;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.fixed_mse_target = 0.3;
  CHECK_NOTHROW(c.validate());
  c.scheme = BaselineScheme::separated_two_stage;
  c.stage1_power_fraction = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("mse grid") {
  const auto g = mse_grid(0.5);
  REQUIRE(g.size() == 12);
  CHECK(g.front() == approx(0.05).epsilon(1e-14));
  CHECK(g.back() == approx(5.0).epsilon(1e-14));
  const double r = g[1] / g[0];
  for (size_t j = 1; j < g.size(); ++j) CHECK(g[j] / g[j - 1] == approx(r).epsilon(1e-12));
  CHECK(mse_grid(2.0, 1).size() == 1);
  CHECK_THROWS_AS(mse_grid(0.0), InvalidArgument);
  CHECK_THROWS_AS(mse_grid(1.0, 0), InvalidArgument);
}

TEST_CASE("separated two-stage baseline") {
  const Scenario sc = desk(1);
  const Baseline1Result b = run_baseline1(sc);
  const CentralResult c = run_algorithm1(sc);

  AuditOptions ao;
  ao.stage2_radii = physical_radii(sc, b.delta);
  CHECK(audit_solution(b.solution, sc, ao).passed());

  // best sensing, paid for in power
  const double adaptive_q = centralized_fim(c.solution, sc).trace_crb();
  CHECK(b.trace_q <= adaptive_q);
  CHECK(total_power(b.solution, sc).total >= c.state.objective_history.back());

  // stage-1 budget
  double top = 0.0;
  for (int m = 0; m < sc.M(); ++m) {
    const double p1 = b.solution.transmit_covariance(0, m).trace().real();
    CHECK(p1 <= sc.P_max_w * (1 + 1e-6));
    top = std::max(top, p1);
  }
  CHECK(top == approx(sc.P_max_w).epsilon(1e-3));
  for (int m = 0; m < sc.M(); ++m)
    CHECK(b.solution.transmit_covariance(0, m).trace().real() == approx(sc.P_max_w).epsilon(1e-3));
}

TEST_CASE("fixed-sensing baseline") {
  const Scenario sc = desk(1);
  CHECK_THROWS_AS(run_baseline2(sc, 0.0), InvalidArgument);
  CHECK_THROWS_AS(run_baseline2(sc, -1.0), InvalidArgument);

  const DecentralResult adaptive = run_algorithm2(sc);
  const double q = centralized_fim(adaptive.solution, sc).trace_crb();
  const double p_adaptive = adaptive.state.objective_history.back();

  SUBCASE("at the adaptive operating point") {
    const DecentralResult b = run_baseline2(sc, q);
    CHECK(b.state.converged);
    CHECK(centralized_fim(b.solution, sc).trace_crb() <= q * (1 + 1e-3));
    CHECK(b.state.objective_history.back() == approx(p_adaptive).epsilon(0.02));
  }
  SUBCASE("a much tighter target costs power") {
    const DecentralResult b = run_baseline2(sc, 0.1 * q);
    CHECK(centralized_fim(b.solution, sc).trace_crb() <= 0.1 * q * (1 + 1e-3));
    CHECK(b.state.objective_history.back() >= p_adaptive);
    const NormalizedModel mdl = NormalizedModel::make(sc);
    std::vector<double> radii;
    for (const auto& c : mdl.coupling) radii.push_back(c.radius(0.1 * q));
    AuditOptions ao;
    ao.stage2_radii = physical_radii(sc, radii);
    CHECK(audit_solution(b.solution, sc, ao).passed());
  }
}
