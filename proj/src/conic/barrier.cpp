#include <cmath>
#include <cstdlib>
#include <limits>

#include "isac/conic/solver.hpp"

namespace isac::conic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Log-barrier of the program's constraints. In phase I an extra slack s (index
// `slack`) relaxes every constraint: F + sI > 0, g(x) < s.
class Barrier {
 public:
  Barrier(const Program& p, int slack, double radius) : p_(p), slack_(slack), r2_(radius * radius) {}

  double degree() const {
    double m = static_cast<double>(p_.linear().size() + p_.smooth().size()) + 1.0;
    for (const auto& c : p_.complex_lmis()) m += c.F.n;
    for (const auto& c : p_.real_lmis()) m += c.F.n;
    return m;
  }

  // Returns false outside the barrier domain.
  bool eval(const RVector& x, double& phi, RVector* g, RMatrix* H) const {
    phi = 0.0;
    const double s = slack_ >= 0 ? x(slack_) : 0.0;
    // Implicit ball |x| < radius keeps the barrier bounded below.
    const double room = r2_ - x.squaredNorm();
    if (!(room > 0.0)) return false;
    phi -= std::log(room);
    if (g) *g += 2.0 * x / room;
    if (H) {
      *H += 4.0 * x * x.transpose() / (room * room);
      H->diagonal().array() += 2.0 / room;
    }
    for (const auto& c : p_.linear()) {
      const double v = c.expr.eval(x) - s;
      if (!(v < 0.0)) return false;
      phi -= std::log(-v);
      if (g) {
        for (const auto& [i, a] : c.expr.terms) (*g)(i) += a / -v;
        if (slack_ >= 0) (*g)(slack_) -= 1.0 / -v;
      }
      if (H) {
        for (const auto& [i, a] : c.expr.terms) {
          for (const auto& [j, b] : c.expr.terms) (*H)(i, j) += a * b / (v * v);
          if (slack_ >= 0) {
            (*H)(i, slack_) -= a / (v * v);
            (*H)(slack_, i) -= a / (v * v);
          }
        }
        if (slack_ >= 0) (*H)(slack_, slack_) += 1.0 / (v * v);
      }
    }
    for (const auto& c : p_.complex_lmis())
      if (!lmi(c.F, x, s, phi, g, H)) return false;
    for (const auto& c : p_.real_lmis())
      if (!lmi(c.F, x, s, phi, g, H)) return false;
    const int n = static_cast<int>(x.size());
    for (const auto& c : p_.smooth()) {
      double f = 0.0;
      RVector gf;
      RMatrix hf;
      if (g) gf = RVector::Zero(n);
      if (H) hf = RMatrix::Zero(n, n);
      if (!c.f->evaluate(x, f, g ? &gf : nullptr, H ? &hf : nullptr)) return false;
      if (slack_ >= 0 && g) gf(slack_) -= 1.0;
      const double v = f - s;
      if (!(v < 0.0)) return false;
      phi -= std::log(-v);
      if (g) *g += gf / -v;
      if (H) *H += gf * gf.transpose() / (v * v) + hf / -v;
    }
    return std::isfinite(phi);
  }

 private:
  template <typename Scalar>
  bool lmi(const AffineMatrix<Scalar>& F, const RVector& x, double s, double& phi, RVector* g, RMatrix* H) const {
    Matrix<Scalar> M = F.eval(x);
    if (slack_ >= 0) M.diagonal().array() += s;
    Eigen::LLT<Matrix<Scalar>> llt(M);
    if (llt.info() != Eigen::Success) return false;
    const auto L = llt.matrixL();
    double logdet = 0.0;
    for (int i = 0; i < F.n; ++i) {
      const double d = std::real(llt.matrixLLT()(i, i));
      if (!(d > 0.0)) return false;
      logdet += 2.0 * std::log(d);
    }
    phi -= logdet;
    if (!g && !H) return std::isfinite(logdet);

    std::vector<int> idx;
    idx.reserve(F.coef.size() + 1);
    Matrix<Scalar> G(F.n * F.n, static_cast<int>(F.coef.size()) + (slack_ >= 0 ? 1 : 0));
    int col = 0;
    auto push = [&](int var, const Matrix<Scalar>& Fi) {
      const Matrix<Scalar> Y = L.solve(Fi);
      Matrix<Scalar> Gi = L.solve(Y.adjoint());
      G.col(col++) = Eigen::Map<const Vector<Scalar>>(Gi.data(), Gi.size());
      idx.push_back(var);
    };
    for (const auto& [var, Fi] : F.coef) push(var, Fi);
    if (slack_ >= 0) push(slack_, Matrix<Scalar>::Identity(F.n, F.n));
    if (g) {
      for (int j = 0; j < col; ++j) {
        Scalar tr = 0;
        for (int a = 0; a < F.n; ++a) tr += G(a * F.n + a, j);
        (*g)(idx[j]) -= std::real(tr);
      }
    }
    if (H) {
      const RMatrix Hl = (G.adjoint() * G).real();
      for (int a = 0; a < col; ++a)
        for (int b = 0; b < col; ++b) (*H)(idx[a], idx[b]) += Hl(a, b);
    }
    return true;
  }

  const Program& p_;
  int slack_;
  double r2_;
};

struct Objective {
  const Program* prog = nullptr;
  int slack = -1;  // phase I: minimize x(slack)

  double value(const RVector& x) const { return slack >= 0 ? x(slack) : prog->objective_value(x); }
  void grad_hess(const RVector& x, RVector& g, RMatrix& H) const {
    g.setZero();
    H.setZero();
    if (slack >= 0) {
      g(slack) = 1.0;
      return;
    }
    for (const auto& [i, c] : prog->objective().terms) g(i) += c;
    for (const auto& [w, e] : prog->penalties()) {
      const double a = e.eval(x);
      for (const auto& [i, ci] : e.terms) {
        g(i) += w * a * ci;
        for (const auto& [j, cj] : e.terms) H(i, j) += w * ci * cj;
      }
    }
  }
};

enum class CenterResult { converged, stalled, limit, early_exit };

class PathFollower {
 public:
  PathFollower(const Barrier& b, const Objective& f, const SolverOptions& opt) : b_(b), f_(f), opt_(opt) {}

  int steps = 0;

  template <typename Stop>
  CenterResult center(RVector& x, double t, Stop&& stop_early) {
    const int n = static_cast<int>(x.size());
    RVector g0(n), gb(n);
    RMatrix H0(n, n), Hb(n, n);
    while (true) {
      if (steps >= opt_.max_newton) return CenterResult::limit;
      ++steps;
      gb.setZero();
      Hb.setZero();
      double phi = 0.0;
      if (!b_.eval(x, phi, &gb, &Hb)) return CenterResult::stalled;
      f_.grad_hess(x, g0, H0);
      const RVector grad = t * g0 + gb;
      RMatrix Hess = t * H0 + Hb;
      const double val = t * f_.value(x) + phi;
      RVector dx = newton_direction(Hess, grad);
      if (!dx.allFinite()) return CenterResult::stalled;
      const double dec = -grad.dot(dx);
      if (dec < 0.0) return CenterResult::stalled;
      // Below ~1e-14 |val| the decrement is rounding noise.
      if (0.5 * dec <= std::max(opt_.newton_tol, 1e-14 * std::abs(val))) return CenterResult::converged;
      double step = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 80; ++ls) {
        const RVector xn = x + step * dx;
        double phin = 0.0;
        if (b_.eval(xn, phin, nullptr, nullptr)) {
          const double vn = t * f_.value(xn) + phin;
          if (vn <= val - 0.01 * step * dec) {
            if (!(vn < val)) return CenterResult::stalled;
            x = xn;
            accepted = true;
            break;
          }
        }
        step *= 0.5;
      }
      if (!accepted) return CenterResult::stalled;
      if (stop_early(x)) return CenterResult::early_exit;
    }
  }

 private:
  static RVector newton_direction(RMatrix& H, const RVector& grad) {
    const int n = static_cast<int>(grad.size());
    const double scale = std::max(H.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    Eigen::LLT<RMatrix> llt(H);
    if (llt.info() == Eigen::Success) {
      RVector dx = -llt.solve(grad);
      if (dx.allFinite()) return dx;
    }
    for (double reg = 1e-14; reg < 1e-2; reg *= 100.0) {
      RMatrix Hr = H;
      Hr.diagonal().array() += reg * scale;
      Eigen::LDLT<RMatrix> ldlt(Hr);
      if (ldlt.info() != Eigen::Success) continue;
      RVector dx = -ldlt.solve(grad);
      if (dx.allFinite()) return dx;
    }
    return RVector::Constant(n, std::numeric_limits<double>::quiet_NaN());
  }

  const Barrier& b_;
  const Objective& f_;
  const SolverOptions& opt_;
};

// t minimizing the Hessian-norm of t*grad f + grad phi at x, capped at t_max.
// Starting far out on the path makes the first centering crawl when the
// objective still has a long way to go.
double initial_t(const Barrier& b, const Objective& f, const RVector& x, double t_max) {
  const int n = static_cast<int>(x.size());
  RVector gb = RVector::Zero(n), g0(n);
  RMatrix Hb = RMatrix::Zero(n, n), H0(n, n);
  double phi = 0.0;
  if (!b.eval(x, phi, &gb, &Hb)) return t_max;
  f.grad_hess(x, g0, H0);
  Hb.diagonal().array() += 1e-12 * std::max(Hb.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  const Eigen::LDLT<RMatrix> ldlt(Hb);
  if (ldlt.info() != Eigen::Success) return t_max;
  const RVector hg = ldlt.solve(g0);
  const double den = g0.dot(hg), num = -gb.dot(hg);
  if (!(den > 0.0) || !(num > 0.0) || !std::isfinite(num / den)) return t_max;
  return std::clamp(num / den, 1e-12 * t_max, t_max);
}

}  // namespace

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal:
      return "optimal";
    case SolveStatus::infeasible:
      return "infeasible";
    case SolveStatus::iteration_limit:
      return "iteration_limit";
    case SolveStatus::numerical_error:
      return "numerical_error";
  }
  return "unknown";
}

std::string solver_backend() {
  const char* env = std::getenv("ISAC_SOLVER");
  const std::string name = env && *env ? env : "barrier";
  if (name != "barrier") throw ConfigError("unknown ISAC_SOLVER backend: " + name);
  return name;
}

SolveResult solve(const Program& prog, const RVector& x0, const SolverOptions& opt) {
  solver_backend();
  const int n = prog.num_variables();
  if (x0.size() != n) throw InvalidArgument("solve: starting point has wrong dimension");
  SolveResult res;
  res.x = x0;

  // Phase I: find a strictly feasible point when x0 is not one.
  const Barrier main_barrier(prog, -1, opt.radius);
  double phi0 = 0.0;
  if (!main_barrier.eval(x0, phi0, nullptr, nullptr)) {
    const auto [viol, tag] = prog.max_violation(x0);
    if (!std::isfinite(viol)) {
      res.status = SolveStatus::numerical_error;
      res.failed_tag = tag;
      res.max_violation = viol;
      return res;
    }
    Program phase1 = prog;  // constraints shared; slack appended below
    const int s_idx = n;
    // s >= -1 keeps phase I bounded.
    phase1.add_scalar("phase1_slack");
    phase1.add_linear(LinearExpr(-1.0) - LinearExpr::variable(s_idx), "phase1_floor");
    RVector y(n + 1);
    y.head(n) = x0;
    y(s_idx) = std::max(viol, -0.5) + 1.0;
    const Barrier b1(phase1, s_idx, opt.radius);
    Objective f1{&phase1, s_idx};
    PathFollower pf(b1, f1, opt);
    const double m1 = b1.degree();
    double t = 1.0;
    bool found = false;
    while (true) {
      const CenterResult cr = pf.center(y, t, [&](const RVector& z) { return z(s_idx) < -0.25; });
      if (y(s_idx) < 0.0 && cr != CenterResult::limit) {
        found = true;
        break;
      }
      if (cr == CenterResult::limit || m1 / t < 1e-10) break;
      t *= opt.mu;
    }
    res.newton_steps += pf.steps;
    if (!found) {
      const auto [v, tg] = prog.max_violation(y.head(n));
      res.status = SolveStatus::infeasible;
      res.x = y.head(n);
      res.failed_tag = tg;
      res.max_violation = v;
      return res;
    }
    res.x = y.head(n);
  }

  const Objective f{&prog, -1};
  PathFollower pf(main_barrier, f, opt);
  const double m = main_barrier.degree();
  RVector x = res.x;
  // scale by |f| and by the gradient balance, whichever is smaller
  const double t_f = opt.t_init * std::min(1.0, std::max(m, 1.0) / std::max(std::abs(f.value(x)), 1e-300));
  double t = std::min(t_f, initial_t(main_barrier, f, x, opt.t_init));
  res.status = SolveStatus::numerical_error;
  int stalls = 0;
  while (true) {
    const CenterResult cr = pf.center(x, t, [](const RVector&) { return false; });
    const double gap = m / t;
    const double target = std::max(opt.gap_tol, opt.rel_gap_tol * std::abs(f.value(x)));
    if (cr == CenterResult::limit) {
      res.status = SolveStatus::iteration_limit;
      break;
    }
    if (gap <= target || m == 0.0) {
      res.status = SolveStatus::optimal;
      break;
    }
    if (cr == CenterResult::stalled) {
      // Newton makes no progress at this precision; accept when within a few digits.
      if (gap <= 1e3 * target) {
        res.status = SolveStatus::optimal;
        break;
      }
      if (++stalls >= 3) break;
    } else {
      stalls = 0;
    }
    t *= opt.mu;
  }
  res.newton_steps += pf.steps;
  res.x = x;
  res.objective = prog.objective_value(x);
  res.max_violation = prog.max_violation(x).first;
  return res;
}

}  // namespace isac::conic
