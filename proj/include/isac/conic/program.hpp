#pragma once

#include <memory>
#include <string>
#include <vector>

#include "isac/conic/expression.hpp"

namespace isac::conic {

/// Convex constraint f(x) <= 0 with an explicit gradient and Hessian.
class SmoothConstraint {
 public:
  virtual ~SmoothConstraint() = default;
  /// Returns false when x lies outside the domain of f.
  virtual bool evaluate(const RVector& x, double& value, RVector* grad, RMatrix* hess) const = 0;
};

/// lin(x) - sum_j w_j ln(arg_j(x)) <= 0, w_j >= 0.
class LogSumConstraint final : public SmoothConstraint {
 public:
  LogSumConstraint(LinearExpr lin, std::vector<std::pair<double, LinearExpr>> logs);
  bool evaluate(const RVector& x, double& value, RVector* grad, RMatrix* hess) const override;

 private:
  LinearExpr lin_;
  std::vector<std::pair<double, LinearExpr>> logs_;
};

/// lin(x) + sum_j w_j e_j(x)^2 <= 0, w_j >= 0.
class QuadraticConstraint final : public SmoothConstraint {
 public:
  QuadraticConstraint(LinearExpr lin, std::vector<std::pair<double, LinearExpr>> squares);
  bool evaluate(const RVector& x, double& value, RVector* grad, RMatrix* hess) const override;

 private:
  LinearExpr lin_;
  std::vector<std::pair<double, LinearExpr>> squares_;
};

template <typename Scalar>
struct LmiConstraint {
  AffineMatrix<Scalar> F;
  std::string tag;
};

struct LinearConstraint {
  LinearExpr expr;  // expr <= 0
  std::string tag;
};

struct SmoothEntry {
  std::shared_ptr<const SmoothConstraint> f;
  std::string tag;
};

/// Minimize c(x) + 1/2 sum_j w_j e_j(x)^2 over linear, smooth convex and LMI constraints.
class Program {
 public:
  int add_scalar(std::string name);
  HermitianVar add_hermitian(int n, std::string name, bool psd = true);
  int num_variables() const { return static_cast<int>(names_.size()); }
  const std::string& name(int i) const { return names_[i]; }

  /// expr <= 0
  void add_linear(LinearExpr expr, std::string tag);
  void add_lmi(AffineMatrix<Complex> F, std::string tag);
  void add_lmi(AffineMatrix<double> F, std::string tag);
  void add_smooth(std::shared_ptr<const SmoothConstraint> f, std::string tag);

  void set_objective(LinearExpr c) { objective_ = std::move(c); }
  /// Adds weight/2 * e(x)^2 to the objective.
  void add_penalty(LinearExpr e, double weight);

  double objective_value(const RVector& x) const;

  const LinearExpr& objective() const { return objective_; }
  const std::vector<std::pair<double, LinearExpr>>& penalties() const { return penalties_; }
  const std::vector<LinearConstraint>& linear() const { return linear_; }
  const std::vector<LmiConstraint<Complex>>& complex_lmis() const { return clmi_; }
  const std::vector<LmiConstraint<double>>& real_lmis() const { return rlmi_; }
  const std::vector<SmoothEntry>& smooth() const { return smooth_; }

  /// Largest violation over all constraints at x (<= 0 means feasible) and its tag.
  std::pair<double, std::string> max_violation(const RVector& x) const;

 private:
  std::vector<std::string> names_;
  LinearExpr objective_;
  std::vector<std::pair<double, LinearExpr>> penalties_;
  std::vector<LinearConstraint> linear_;
  std::vector<LmiConstraint<Complex>> clmi_;
  std::vector<LmiConstraint<double>> rlmi_;
  std::vector<SmoothEntry> smooth_;
};

}  // namespace isac::conic
