#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "approx.hpp"
#include "isac/decentral_opt.hpp"

using namespace isac;

namespace {

constexpr Family kAll[] = {Family::e, Family::t, Family::u, Family::V};

int stages_of(Family f) { return f == Family::V ? 1 : kStages; }

RVector random_real(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  RVector v(n);
  for (int i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

ConsensusState blank_state(int M, int K) {
  const ConsensusLayout lay{M, K};
  ConsensusState st;
  st.local.resize(M);
  for (auto& l : st.local) l.z = RVector::Zero(lay.local_size());
  st.dual.assign(M, RVector::Zero(lay.local_size()));
  st.global = RVector::Zero(lay.global_size());
  st.rho = {1.0, 1.0, 1.0, 1.0};
  return st;
}

// locals that agree exactly with the global stack
void set_consistent(ConsensusState& st, const SelectionMaps& maps) {
  const ConsensusLayout lay{maps.M, maps.K};
  for (int m = 0; m < maps.M; ++m)
    for (Family f : kAll)
      for (int i = 0; i < stages_of(f); ++i)
        st.local[m].z.segment(lay.local_offset(f, i), lay.local_length(f)) =
            maps.map(f, m) * st.global.segment(lay.global_offset(f, i), lay.global_length(f));
}

double augmented(const ConsensusState& st, const SelectionMaps& maps) {
  const ConsensusLayout lay{maps.M, maps.K};
  double h = 0.0;
  for (int m = 0; m < maps.M; ++m)
    for (Family f : kAll)
      for (int i = 0; i < stages_of(f); ++i) {
        const double rho = st.rho[static_cast<int>(f)];
        const int off = lay.local_offset(f, i), len = lay.local_length(f);
        const RVector r = st.local[m].z.segment(off, len) -
                          maps.map(f, m) * st.global.segment(lay.global_offset(f, i), lay.global_length(f)) +
                          st.dual[m].segment(off, len) / rho;
        h += 0.5 * rho * r.squaredNorm();
      }
  return h;
}

Scenario desk(std::uint64_t seed, double R_info = 3.0) {
  SystemConfig c = SystemConfig::desk_default();
  c.rng_seed = seed;
  c.R_info = R_info;
  return build_scenario(c);
}

}  // namespace

TEST_CASE("selection maps for two BSs and one user") {
  const SelectionMaps s = SelectionMaps::build(2, 1);
  // global order (source, victim, user): e_{0,1}, e_{1,0}
  CHECK(s.global_index(0, 1, 0) == 0);
  CHECK(s.global_index(1, 0, 0) == 1);
  RMatrix E0(2, 2), E1(2, 2);
  E0 << 0, 1, 1, 0;
  E1 << 1, 0, 0, 1;
  CHECK(s.E[0] == E0);
  CHECK(s.E[1] == E1);
  CHECK_THROWS_AS(SelectionMaps::build(1, 2), InvalidArgument);
}

TEST_CASE("normal matrices are invertible") {
  const SelectionMaps s = SelectionMaps::build(3, 2);
  RMatrix UU = RMatrix::Zero(3, 3);
  for (const auto& U : s.U) UU += U.transpose() * U;
  // aggregate rows couple the columns: (M - 2) 11^T + 2 I
  RMatrix expect = RMatrix::Constant(3, 3, 1.0) + 2.0 * RMatrix::Identity(3, 3);
  CHECK((UU - expect).norm() == 0.0);
  CHECK((s.U_normal_inv * UU - RMatrix::Identity(3, 3)).norm() < 1e-12);
  for (Family f : kAll) {
    RMatrix A = RMatrix::Zero(s.normal_inv(f).rows(), s.normal_inv(f).cols());
    for (int m = 0; m < 3; ++m) A += s.map(f, m).transpose() * s.map(f, m);
    CHECK((s.normal_inv(f) * A - RMatrix::Identity(A.rows(), A.cols())).norm() < 1e-12);
  }
}

TEST_CASE("maps round trip through the global update") {
  for (int M : {2, 3, 4}) {
    const SelectionMaps maps = SelectionMaps::build(M, 2);
    std::mt19937_64 rng(M);
    ConsensusState st = blank_state(M, 2);
    const RVector G = random_real(st.global.size(), rng);
    st.global = G;
    set_consistent(st, maps);
    st.global.setZero();
    update_globals(st, maps);
    CHECK((st.global - G).norm() < 1e-12 * G.norm());
    CHECK(consensus_residual(st, maps) < 1e-14);
  }
}

TEST_CASE("aggregate rows sum the other BSs") {
  const SelectionMaps maps = SelectionMaps::build(3, 2);
  const ConsensusLayout lay{3, 2};
  std::mt19937_64 rng(1);
  const RVector g = random_real(lay.global_length(Family::e), rng);
  for (int m = 0; m < 3; ++m) {
    const RVector z = maps.E[m] * g;
    for (int k = 0; k < 2; ++k) {
      double agg = 0.0;
      for (int src = 0; src < 3; ++src)
        if (src != m) agg += g(maps.global_index(src, m, k));
      CHECK(z(k) == approx(agg));
    }
  }
}

TEST_CASE("global update matches a least-squares solve") {
  const int M = 3, K = 2;
  const SelectionMaps maps = SelectionMaps::build(M, K);
  const ConsensusLayout lay{M, K};
  std::mt19937_64 rng(2);
  ConsensusState st = blank_state(M, K);
  st.rho = {2.0, 0.5, 3.0, 7.0};
  for (int m = 0; m < M; ++m) {
    st.local[m].z = random_real(lay.local_size(), rng);
    st.dual[m] = random_real(lay.local_size(), rng);
  }
  update_globals(st, maps);
  for (Family f : kAll)
    for (int i = 0; i < stages_of(f); ++i) {
      const double rho = st.rho[static_cast<int>(f)];
      const int len = lay.local_length(f), glen = lay.global_length(f);
      RMatrix A(M * len, glen);
      RVector b(M * len);
      for (int m = 0; m < M; ++m) {
        A.middleRows(m * len, len) = maps.map(f, m);
        b.segment(m * len, len) = st.local[m].z.segment(lay.local_offset(f, i), len) +
                                  st.dual[m].segment(lay.local_offset(f, i), len) / rho;
      }
      const RVector ls = A.colPivHouseholderQr().solve(b);
      CHECK((st.global.segment(lay.global_offset(f, i), glen) - ls).norm() < 1e-10 * (1 + ls.norm()));
    }

  // exact minimizer: no single-entry perturbation lowers the augmented terms
  const double h0 = augmented(st, maps);
  for (int j = 0; j < st.global.size(); ++j)
    for (double d : {-1e-3, 1e-3}) {
      ConsensusState p = st;
      p.global(j) += d;
      CHECK(augmented(p, maps) >= h0 - 1e-12);
    }
}

TEST_CASE("dual updates") {
  const int M = 2, K = 2;
  const SelectionMaps maps = SelectionMaps::build(M, K);
  std::mt19937_64 rng(3);
  ConsensusState st = blank_state(M, K);
  st.global = random_real(st.global.size(), rng);
  set_consistent(st, maps);
  for (auto& d : st.dual) d = random_real(d.size(), rng);
  const auto before = st.dual;
  update_duals(st, maps);
  for (int m = 0; m < M; ++m) CHECK((st.dual[m] - before[m]).norm() == 0.0);

  // constant residual r: increments rho r, then scale * rho r after the penalty grows
  const RVector r = random_real(st.local[0].z.size(), rng);
  for (int m = 0; m < M; ++m) st.local[m].z += r;
  st.rho = {2.0, 2.0, 2.0, 2.0};
  const auto d0 = st.dual;
  update_duals(st, maps);
  for (int m = 0; m < M; ++m) CHECK((st.dual[m] - d0[m] - 2.0 * r).norm() < 1e-12);
  for (double& p : st.rho) p *= 1.5;
  const auto d1 = st.dual;
  update_duals(st, maps);
  for (int m = 0; m < M; ++m) CHECK((st.dual[m] - d1[m] - 3.0 * r).norm() < 1e-12);
}

TEST_CASE("message ledger") {
  for (int M : {2, 3, 4})
    for (int K : {1, 2, 3}) {
      const auto msgs = iteration_messages(5, M, K);
      CHECK(msgs.size() == static_cast<size_t>(3 * M));
      long long total = 0;
      for (const auto& r : msgs) {
        CHECK(r.iter == 5);
        total += r.scalars;
      }
      // each BS ships its locals up and gets its view of the globals back
      CHECK(total == 2LL * M * (4 * M * K + 10));
    }
  CHECK(centralized_ledger(3, 4, 2, 1024) == 2LL * (3 * 4 * 1024 + 9 * 2 * 4 + 3 * 4));
}

TEST_CASE("local view holds only the BS's own data") {
  const Scenario sc = desk(1);
  const NormalizedModel mdl = NormalizedModel::make(sc);
  for (int m = 0; m < mdl.M; ++m) {
    const LocalView v(mdl, m);
    CHECK(v.bs() == m);
    CHECK(v.g_bar() == mdl.g_bar[m]);
    CHECK(v.beta1() == mdl.beta1[m]);
    for (int victim = 0; victim < mdl.M; ++victim)
      for (int k = 0; k < mdl.K; ++k) CHECK(v.h(victim, k) == mdl.h[m][victim][k]);
  }
}

TEST_CASE("Algorithm 2 on a desk scenario") {
  const Scenario sc = desk(1);
  std::ostringstream trace, messages;
  DecentralOptions opt;
  opt.trace = &trace;
  opt.messages = &messages;
  const DecentralResult r = run_algorithm2(sc, opt);
  REQUIRE(r.state.converged);
  CHECK(r.state.residual_history.back() <= 1e-3);
  const auto& f = r.state.objective_history;
  CHECK(f.back() >= *std::min_element(f.begin(), f.end()));
  CHECK(audit_solution(r.solution, sc).passed());

  // penalties grew geometrically
  CHECK(r.state.rho[0] == approx(std::pow(1.5, r.state.iterations)).epsilon(1e-9));

  const double central = run_algorithm1(sc).state.objective_history.back();
  CHECK(f.back() >= central * (1 - 1e-4));

  int lines = 0;
  std::istringstream ms(messages.str());
  for (std::string s; std::getline(ms, s);) ++lines;
  CHECK(lines == static_cast<int>(r.messages.size()));
  CHECK(r.messages.size() == static_cast<size_t>(3 * sc.M() * r.state.iterations));
  std::istringstream ts(trace.str());
  int tl = 0;
  for (std::string s; std::getline(ts, s);) ++tl;
  CHECK(tl == r.state.iterations);
}

TEST_CASE("single BS matches Algorithm 1") {
  SystemConfig c = SystemConfig::desk_default();
  c.M = 1;
  c.beta_nlos = {0.1};
  c.bs_positions = {{-20.0, 0.0}};  // on the line through the eavesdropper estimate
  c.R_info = 5.0;
  const Scenario sc = build_scenario(c);
  const double a1 = run_algorithm1(sc).state.objective_history.back();
  const DecentralResult r = run_algorithm2(sc);
  CHECK(r.state.converged);
  CHECK(std::abs(r.state.objective_history.back() - a1) <= 1e-4 * a1);
}
