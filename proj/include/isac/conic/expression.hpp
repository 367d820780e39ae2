#pragma once

#include <map>
#include <type_traits>
#include <utility>
#include <vector>

#include "isac/core.hpp"

namespace isac::conic {

/// Sparse affine function sum_j c_j x_j + constant of the real decision vector.
struct LinearExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  LinearExpr() = default;
  LinearExpr(double c) : constant(c) {}  // NOLINT(google-explicit-constructor)

  static LinearExpr variable(int index, double coef = 1.0) {
    LinearExpr e;
    e.terms.emplace_back(index, coef);
    return e;
  }

  LinearExpr& add(int index, double coef) {
    if (coef != 0.0) terms.emplace_back(index, coef);
    return *this;
  }
  LinearExpr& operator+=(const LinearExpr& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    constant += o.constant;
    return *this;
  }
  LinearExpr& operator-=(const LinearExpr& o) { return *this += o * -1.0; }
  LinearExpr& operator*=(double s) {
    for (auto& t : terms) t.second *= s;
    constant *= s;
    return *this;
  }
  LinearExpr operator*(double s) const {
    LinearExpr e = *this;
    return e *= s;
  }

  double eval(const RVector& x) const {
    double v = constant;
    for (const auto& [i, c] : terms) v += c * x(i);
    return v;
  }

  /// Merges duplicate indices and drops zeros.
  LinearExpr& compress() {
    std::map<int, double> acc;
    for (const auto& [i, c] : terms) acc[i] += c;
    terms.clear();
    for (const auto& [i, c] : acc)
      if (c != 0.0) terms.emplace_back(i, c);
    return *this;
  }
};

inline LinearExpr operator+(LinearExpr a, const LinearExpr& b) { return a += b; }
inline LinearExpr operator-(LinearExpr a, const LinearExpr& b) { return a -= b; }
inline LinearExpr operator*(double s, const LinearExpr& e) { return e * s; }
inline LinearExpr operator-(const LinearExpr& e) { return e * -1.0; }

/// Hermitian n x n variable stored as n^2 reals: the diagonal first, then
/// (Re, Im) of each strictly upper entry in row-major order.
struct HermitianVar {
  int offset = -1;
  int n = 0;

  int size() const { return n * n; }
  int diag(int p) const { return offset + p; }
  int pair(int p, int q) const { return p * n - p * (p + 1) / 2 + (q - p - 1); }
  int re(int p, int q) const { return offset + n + 2 * pair(p, q); }
  int im(int p, int q) const { return offset + n + 2 * pair(p, q) + 1; }
};

/// Re Tr(A X).
LinearExpr re_trace(const HermitianVar& X, const CMatrix& A);
/// Tr X.
LinearExpr trace(const HermitianVar& X);
/// g^H X g.
LinearExpr quadratic_form(const HermitianVar& X, const CVector& g);

CMatrix to_matrix(const HermitianVar& X, const RVector& x);
void set_matrix(const HermitianVar& X, const CMatrix& value, RVector& x);

/// F(x) = F0 + sum_j x_j F_j with Hermitian (or symmetric) coefficients.
template <typename Scalar>
struct AffineMatrix {
  int n = 0;
  Matrix<Scalar> constant;
  std::map<int, Matrix<Scalar>> coef;

  explicit AffineMatrix(int dim) : n(dim), constant(Matrix<Scalar>::Zero(dim, dim)) {}

  AffineMatrix& add_constant(const Matrix<Scalar>& M) {
    check(M);
    constant += M;
    return *this;
  }
  AffineMatrix& add_term(int var, const Matrix<Scalar>& M) {
    check(M);
    auto it = coef.find(var);
    if (it == coef.end())
      coef.emplace(var, M);
    else
      it->second += M;
    return *this;
  }
  AffineMatrix& add_expr(const LinearExpr& e, const Matrix<Scalar>& M) {
    check(M);
    constant += e.constant * M;
    for (const auto& [i, c] : e.terms) add_term(i, c * M);
    return *this;
  }
  /// Adds scale * C^H X C, where C is X.n x n.
  AffineMatrix& add_congruence(const HermitianVar& X, const CMatrix& C, double scale = 1.0)
    requires std::is_same_v<Scalar, Complex>
  {
    if (C.rows() != X.n || C.cols() != n) throw InvalidArgument("add_congruence: dimension mismatch");
    for (int p = 0; p < X.n; ++p) {
      const CVector cp = C.row(p).adjoint();
      add_term(X.diag(p), scale * cp * cp.adjoint());
      for (int q = p + 1; q < X.n; ++q) {
        const CVector cq = C.row(q).adjoint();
        const CMatrix pq = cp * cq.adjoint();  // C^H E_pq C
        add_term(X.re(p, q), scale * (pq + pq.adjoint()));
        add_term(X.im(p, q), scale * Complex(0.0, 1.0) * (pq - pq.adjoint()));
      }
    }
    return *this;
  }

  Matrix<Scalar> eval(const RVector& x) const {
    Matrix<Scalar> F = constant;
    for (const auto& [i, M] : coef) F += x(i) * M;
    return F;
  }

 private:
  void check(const Matrix<Scalar>& M) const {
    if (M.rows() != n || M.cols() != n) throw InvalidArgument("AffineMatrix: block dimension mismatch");
  }
};

}  // namespace isac::conic
