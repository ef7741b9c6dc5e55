#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

// Finite-dimensional matrix model of a Banach quasi *-algebra: d x d complex
// matrices carrying two norms, the ambient Schatten-p norm built on the
// normalized trace tau(X) = Tr(X)/d and the operator norm on the dense core.
// With tau, norms are dimension-free: ||identity||_p = 1 for every p.

namespace sesqui {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr double kEps = std::numeric_limits<double>::epsilon();

class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

struct AlgebraContext {
  int dim = 0;
  double p = 2.0;  // Schatten index of the ambient norm

  friend bool operator==(const AlgebraContext&, const AlgebraContext&) = default;
};

inline AlgebraContext make_context(int dim, double p) {
  if (dim < 1) throw std::invalid_argument("make_context: dim must be >= 1");
  if (std::isnan(p) || p < 2.0)
    throw std::invalid_argument("make_context: Schatten index p must be >= 2");
  return AlgebraContext{dim, p};
}

// normalized trace
inline Complex tau(const Matrix& x) {
  return x.trace() / static_cast<double>(x.rows());
}

class Element {
 public:
  Element(Matrix m, AlgebraContext ctx) : matrix_(std::move(m)), ctx_(ctx) {
    if (matrix_.rows() != ctx_.dim || matrix_.cols() != ctx_.dim)
      throw std::invalid_argument("Element: matrix shape does not match context dim");
    if (!matrix_.allFinite())
      throw std::invalid_argument("Element: entries must be finite");
  }

  const Matrix& matrix() const { return matrix_; }
  const AlgebraContext& context() const { return ctx_; }
  int dim() const { return ctx_.dim; }

 private:
  Matrix matrix_;
  AlgebraContext ctx_;
};

inline void require_same_context(const AlgebraContext& a, const AlgebraContext& b,
                                 const char* where) {
  if (!(a == b))
    throw std::invalid_argument(std::string(where) + ": mixed algebra contexts");
}

inline Element identity_element(const AlgebraContext& ctx) {
  return Element(Matrix::Identity(ctx.dim, ctx.dim), ctx);
}

inline Element multiply(const Element& a, const Element& b) {
  require_same_context(a.context(), b.context(), "multiply");
  return Element(a.matrix() * b.matrix(), a.context());
}

inline Element adjoint(const Element& a) {
  return Element(a.matrix().adjoint(), a.context());
}

inline Element operator*(const Element& a, const Element& b) { return multiply(a, b); }

inline Element operator+(const Element& a, const Element& b) {
  require_same_context(a.context(), b.context(), "operator+");
  return Element(a.matrix() + b.matrix(), a.context());
}

inline Element operator-(const Element& a, const Element& b) {
  require_same_context(a.context(), b.context(), "operator-");
  return Element(a.matrix() - b.matrix(), a.context());
}

inline Element operator*(Complex c, const Element& a) {
  return Element(c * a.matrix(), a.context());
}

inline RealVector singular_values(const Matrix& x) {
  Eigen::JacobiSVD<Matrix> svd(x);
  return svd.singularValues();
}

// Schatten norm with normalized trace: (sum_i sigma_i^r / d)^(1/r); r = inf
// gives the operator norm. r >= 1 required.
inline double schatten_norm(const Element& a, double r) {
  if (std::isnan(r) || r < 1.0)
    throw std::invalid_argument("schatten_norm: r must be >= 1 (or inf)");
  const RealVector sv = singular_values(a.matrix());
  if (std::isinf(r)) return sv.size() ? sv.maxCoeff() : 0.0;
  const double d = static_cast<double>(a.dim());
  // scale by sigma_max first so large powers cannot overflow
  const double smax = sv.size() ? sv.maxCoeff() : 0.0;
  if (smax == 0.0) return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) acc += std::pow(sv(i) / smax, r);
  return smax * std::pow(acc / d, 1.0 / r);
}

inline double ambient_norm(const Element& a) { return schatten_norm(a, a.context().p); }

inline double operator_norm(const Element& a) { return schatten_norm(a, kInfinity); }

namespace detail {

inline Matrix matrix_unit(int d, int i, int j) {
  Matrix e = Matrix::Zero(d, d);
  e(i, j) = 1.0;
  return e;
}

// row-major flattening; unit E_ij sits at index i*d + j
inline Vector vec_rowmajor(const Matrix& x) {
  const int d = static_cast<int>(x.rows());
  Vector u(static_cast<Eigen::Index>(d) * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) u(static_cast<Eigen::Index>(i) * d + j) = x(i, j);
  return u;
}

inline Matrix unvec_rowmajor(const Vector& u, int d) {
  Matrix x(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = u(static_cast<Eigen::Index>(i) * d + j);
  return x;
}

}  // namespace detail

}  // namespace sesqui
