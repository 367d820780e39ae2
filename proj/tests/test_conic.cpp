#include <cmath>
#include <memory>

#include "approx.hpp"
#include "isac/conic/solver.hpp"

using namespace isac;
using namespace isac::conic;

TEST_CASE("linear program with box constraints") {
  Program p;
  const int x = p.add_scalar("x"), y = p.add_scalar("y");
  p.add_linear(LinearExpr(1.0) - LinearExpr::variable(x), "x>=1");
  p.add_linear(LinearExpr(2.0) - LinearExpr::variable(y), "y>=2");
  p.add_linear(LinearExpr::variable(x) + LinearExpr::variable(y) - 10.0, "sum<=10");
  p.set_objective(LinearExpr::variable(x) + LinearExpr::variable(y));
  const auto r = solve(p, RVector::Zero(2));
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.objective == approx(3.0).epsilon(1e-7));
  CHECK(r.max_violation <= 0.0);
}

TEST_CASE("real-valued trace minimization gives the smallest eigenvalue") {
  RMatrix C(3, 3);
  C << 4, 1, 0, 1, 3, 1, 0, 1, 2;
  Program p;
  const HermitianVar X = p.add_hermitian(3, "X");
  const CMatrix Cc = C.cast<Complex>();
  p.set_objective(re_trace(X, Cc));
  p.add_linear(LinearExpr(1.0) - trace(X), "trace>=1");
  const auto r = solve(p, RVector::Zero(p.num_variables()));
  REQUIRE(r.status == SolveStatus::optimal);
  Eigen::SelfAdjointEigenSolver<RMatrix> es(C);
  CHECK(r.objective == approx(es.eigenvalues()(0)).epsilon(1e-7));
  // optimum is rank one along the minimal eigenvector
  const CMatrix Xv = to_matrix(X, r.x);
  Eigen::SelfAdjointEigenSolver<CMatrix> ex(Xv);
  CHECK(ex.eigenvalues()(2) / Xv.trace().real() > 0.999);
}

TEST_CASE("complex Hermitian objective") {
  CMatrix C(2, 2);
  C << Complex(2, 0), Complex(0, 1), Complex(0, -1), Complex(2, 0);
  Program p;
  const HermitianVar X = p.add_hermitian(2, "X");
  p.set_objective(re_trace(X, C));
  p.add_linear(LinearExpr(1.0) - trace(X), "trace>=1");
  const auto r = solve(p, RVector::Zero(p.num_variables()));
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.objective == approx(1.0).epsilon(1e-7));
}

TEST_CASE("congruence and trace helpers agree with dense evaluation") {
  Program p;
  const HermitianVar X = p.add_hermitian(3, "X", false);
  RVector x = RVector::Random(p.num_variables());
  const CMatrix Xv = to_matrix(X, x);
  CHECK((Xv - Xv.adjoint()).norm() < 1e-15);
  RVector x2 = RVector::Zero(p.num_variables());
  set_matrix(X, Xv, x2);
  CHECK((x2 - x).norm() < 1e-15);
  const CMatrix A = CMatrix::Random(3, 3);
  CHECK(re_trace(X, A).eval(x) == approx((A * Xv).trace().real()));
  const CMatrix C = CMatrix::Random(3, 4);
  AffineMatrix<Complex> F(4);
  F.add_congruence(X, C, 2.0);
  CHECK((F.eval(x) - 2.0 * C.adjoint() * Xv * C).norm() < 1e-12);
}

TEST_CASE("trace-inverse epigraph") {
  Mat2 Fm;
  Fm << 2.0, 0.5, 0.5, 1.0;
  Program p;
  const int t00 = p.add_scalar("t00"), t01 = p.add_scalar("t01"), t11 = p.add_scalar("t11");
  AffineMatrix<double> F(4);
  RMatrix E = RMatrix::Zero(4, 4);
  E(0, 0) = 1;
  F.add_term(t00, E);
  E.setZero();
  E(0, 1) = E(1, 0) = 1;
  F.add_term(t01, E);
  E.setZero();
  E(1, 1) = 1;
  F.add_term(t11, E);
  RMatrix K = RMatrix::Zero(4, 4);
  K.block(0, 2, 2, 2) = Mat2::Identity();
  K.block(2, 0, 2, 2) = Mat2::Identity();
  K.block(2, 2, 2, 2) = Fm;
  F.add_constant(K);
  p.add_lmi(F, "epigraph");
  p.set_objective(LinearExpr::variable(t00) + LinearExpr::variable(t11));
  const auto r = solve(p, RVector::Zero(3));
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.objective == approx(Fm.inverse().trace()).epsilon(1e-7));
}

TEST_CASE("log and quadratic smooth constraints") {
  SUBCASE("log") {
    Program p;
    const int x = p.add_scalar("x");
    p.add_smooth(std::make_shared<LogSumConstraint>(LinearExpr(1.0),
                                                    std::vector<std::pair<double, LinearExpr>>{
                                                        {1.0, LinearExpr::variable(x)}}),
                 "log x >= 1");
    p.set_objective(LinearExpr::variable(x));
    RVector x0(1);
    x0 << 0.5;
    const auto r = solve(p, x0);
    REQUIRE(r.status == SolveStatus::optimal);
    CHECK(r.objective == approx(std::exp(1.0)).epsilon(1e-7));
  }
  SUBCASE("disk") {
    Program p;
    const int x = p.add_scalar("x"), y = p.add_scalar("y");
    p.add_smooth(std::make_shared<QuadraticConstraint>(
                     LinearExpr(-1.0),
                     std::vector<std::pair<double, LinearExpr>>{{1.0, LinearExpr::variable(x)},
                                                                {1.0, LinearExpr::variable(y)}}),
                 "disk");
    p.set_objective(LinearExpr::variable(x, -1.0) + LinearExpr::variable(y, -1.0));
    const auto r = solve(p, RVector::Constant(2, 3.0));
    REQUIRE(r.status == SolveStatus::optimal);
    CHECK(r.objective == approx(-std::sqrt(2.0)).epsilon(1e-7));
  }
}

TEST_CASE("quadratic penalty objective") {
  Program p;
  const int x = p.add_scalar("x");
  p.add_linear(LinearExpr::variable(x) - 1.0, "x<=1");
  p.add_penalty(LinearExpr::variable(x) - 3.0, 1e6);
  const auto r = solve(p, RVector::Zero(1));
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.x(0) == approx(1.0).epsilon(1e-7));
}

TEST_CASE("infeasible program reports the violated family") {
  Program p;
  const int x = p.add_scalar("x");
  p.add_linear(LinearExpr(1.0) - LinearExpr::variable(x), "lower");
  p.add_linear(LinearExpr::variable(x), "upper");
  p.set_objective(LinearExpr::variable(x));
  const auto r = solve(p, RVector::Zero(1));
  CHECK(r.status == SolveStatus::infeasible);
  CHECK((r.failed_tag == "lower" || r.failed_tag == "upper"));
  CHECK(r.max_violation > 0.4);
}

TEST_CASE("unknown backend name is rejected") {
  setenv("ISAC_SOLVER", "nope", 1);
  CHECK_THROWS_AS(solver_backend(), ConfigError);
  unsetenv("ISAC_SOLVER");
  CHECK(solver_backend() == "barrier");
}
