#include "isac/conic/program.hpp"

#include <cmath>
#include <limits>

namespace isac::conic {

namespace {

void add_gradient(const LinearExpr& e, double scale, RVector& g) {
  for (const auto& [i, c] : e.terms) g(i) += scale * c;
}

void add_outer(const LinearExpr& e, double scale, RMatrix& H) {
  for (const auto& [i, ci] : e.terms)
    for (const auto& [j, cj] : e.terms) H(i, j) += scale * ci * cj;
}

template <typename Scalar>
double lmi_violation(const AffineMatrix<Scalar>& F, const RVector& x) {
  const Matrix<Scalar> M = F.eval(x);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(M, Eigen::EigenvaluesOnly);
  return -es.eigenvalues().minCoeff();
}

}  // namespace

LogSumConstraint::LogSumConstraint(LinearExpr lin, std::vector<std::pair<double, LinearExpr>> logs)
    : lin_(std::move(lin.compress())), logs_(std::move(logs)) {
  for (auto& [w, e] : logs_) {
    if (w < 0.0) throw InvalidArgument("LogSumConstraint: negative weight");
    e.compress();
  }
}

bool LogSumConstraint::evaluate(const RVector& x, double& value, RVector* grad, RMatrix* hess) const {
  value = lin_.eval(x);
  if (grad) add_gradient(lin_, 1.0, *grad);
  for (const auto& [w, e] : logs_) {
    const double a = e.eval(x);
    if (!(a > 0.0)) return false;
    value -= w * std::log(a);
    if (grad) add_gradient(e, -w / a, *grad);
    if (hess) add_outer(e, w / (a * a), *hess);
  }
  return std::isfinite(value);
}

QuadraticConstraint::QuadraticConstraint(LinearExpr lin, std::vector<std::pair<double, LinearExpr>> squares)
    : lin_(std::move(lin.compress())), squares_(std::move(squares)) {
  for (auto& [w, e] : squares_) {
    if (w < 0.0) throw InvalidArgument("QuadraticConstraint: negative weight");
    e.compress();
  }
}

bool QuadraticConstraint::evaluate(const RVector& x, double& value, RVector* grad, RMatrix* hess) const {
  value = lin_.eval(x);
  if (grad) add_gradient(lin_, 1.0, *grad);
  for (const auto& [w, e] : squares_) {
    const double a = e.eval(x);
    value += w * a * a;
    if (grad) add_gradient(e, 2.0 * w * a, *grad);
    if (hess) add_outer(e, 2.0 * w, *hess);
  }
  return std::isfinite(value);
}

int Program::add_scalar(std::string name) {
  names_.push_back(std::move(name));
  return num_variables() - 1;
}

HermitianVar Program::add_hermitian(int n, std::string name, bool psd) {
  if (n < 1) throw InvalidArgument("add_hermitian: empty block");
  HermitianVar X{num_variables(), n};
  for (int j = 0; j < n * n; ++j) names_.push_back(name + "[" + std::to_string(j) + "]");
  if (psd) {
    AffineMatrix<Complex> F(n);
    F.add_congruence(X, CMatrix::Identity(n, n));
    add_lmi(std::move(F), name + ">=0");
  }
  return X;
}

void Program::add_linear(LinearExpr expr, std::string tag) {
  expr.compress();
  linear_.push_back({std::move(expr), std::move(tag)});
}

void Program::add_lmi(AffineMatrix<Complex> F, std::string tag) { clmi_.push_back({std::move(F), std::move(tag)}); }
void Program::add_lmi(AffineMatrix<double> F, std::string tag) { rlmi_.push_back({std::move(F), std::move(tag)}); }

void Program::add_smooth(std::shared_ptr<const SmoothConstraint> f, std::string tag) {
  smooth_.push_back({std::move(f), std::move(tag)});
}

void Program::add_penalty(LinearExpr e, double weight) {
  if (weight < 0.0) throw InvalidArgument("add_penalty: negative weight");
  penalties_.emplace_back(weight, std::move(e.compress()));
}

double Program::objective_value(const RVector& x) const {
  double v = objective_.eval(x);
  for (const auto& [w, e] : penalties_) {
    const double a = e.eval(x);
    v += 0.5 * w * a * a;
  }
  return v;
}

std::pair<double, std::string> Program::max_violation(const RVector& x) const {
  double worst = -std::numeric_limits<double>::infinity();
  std::string tag;
  auto consider = [&](double v, const std::string& t) {
    if (v > worst) {
      worst = v;
      tag = t;
    }
  };
  for (const auto& c : linear_) consider(c.expr.eval(x), c.tag);
  for (const auto& c : clmi_) consider(lmi_violation(c.F, x), c.tag);
  for (const auto& c : rlmi_) consider(lmi_violation(c.F, x), c.tag);
  for (const auto& c : smooth_) {
    double v = 0.0;
    const bool ok = c.f->evaluate(x, v, nullptr, nullptr);
    consider(ok ? v : std::numeric_limits<double>::infinity(), c.tag);
  }
  return {worst, tag};
}

}  // namespace isac::conic
