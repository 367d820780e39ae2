#include "isac/conic/expression.hpp"

namespace isac::conic {

LinearExpr re_trace(const HermitianVar& X, const CMatrix& A) {
  if (A.rows() != X.n || A.cols() != X.n) throw InvalidArgument("re_trace: dimension mismatch");
  LinearExpr e;
  for (int p = 0; p < X.n; ++p) {
    e.add(X.diag(p), A(p, p).real());
    for (int q = p + 1; q < X.n; ++q) {
      e.add(X.re(p, q), A(q, p).real() + A(p, q).real());
      e.add(X.im(p, q), A(p, q).imag() - A(q, p).imag());
    }
  }
  return e;
}

LinearExpr trace(const HermitianVar& X) {
  LinearExpr e;
  for (int p = 0; p < X.n; ++p) e.add(X.diag(p), 1.0);
  return e;
}

LinearExpr quadratic_form(const HermitianVar& X, const CVector& g) { return re_trace(X, g * g.adjoint()); }

CMatrix to_matrix(const HermitianVar& X, const RVector& x) {
  CMatrix M(X.n, X.n);
  for (int p = 0; p < X.n; ++p) {
    M(p, p) = x(X.diag(p));
    for (int q = p + 1; q < X.n; ++q) {
      M(p, q) = Complex(x(X.re(p, q)), x(X.im(p, q)));
      M(q, p) = std::conj(M(p, q));
    }
  }
  return M;
}

void set_matrix(const HermitianVar& X, const CMatrix& value, RVector& x) {
  if (value.rows() != X.n || value.cols() != X.n) throw InvalidArgument("set_matrix: dimension mismatch");
  for (int p = 0; p < X.n; ++p) {
    x(X.diag(p)) = value(p, p).real();
    for (int q = p + 1; q < X.n; ++q) {
      const Complex v = 0.5 * (value(p, q) + std::conj(value(q, p)));
      x(X.re(p, q)) = v.real();
      x(X.im(p, q)) = v.imag();
    }
  }
}

}  // namespace isac::conic
