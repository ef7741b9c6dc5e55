#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "sesqui/algebra.hpp"
#include "sesqui/trace_form.hpp"

// Eigenstate calculus for positive trace forms. An element a is an
// eigenstate of a RIGHT form phi with eigenvalue lambda when
// phi(b, a) = lambda phi(b, e) for every b, equivalently when the residual
// phi(a - lambda e, a - lambda e) vanishes; lambda is then forced to be
// phi(e, a) / phi(e, e).

namespace sesqui {

namespace detail {

inline void require_right(const TraceForm& f, const char* where) {
  if (f.flavor() != FormFlavor::right)
    throw std::invalid_argument(std::string(where) + ": RIGHT-flavor form required");
}

inline double form_mass(const TraceForm& f, const char* where) {
  const double t = tau(f.weight()).real();
  if (t <= 0.0) throw std::domain_error(std::string(where) + ": degenerate form, phi(e,e) = 0");
  return t;
}

}  // namespace detail

inline double eigen_residual(const TraceForm& f, const Element& a, Complex lambda) {
  detail::require_right(f, "eigen_residual");
  const Element r = a - lambda * identity_element(a.context());
  return f(r, r).real();
}

inline Complex eigenvalue_extract(const TraceForm& f, const Element& a) {
  detail::require_right(f, "eigenvalue_extract");
  const double mass = detail::form_mass(f, "eigenvalue_extract");
  return f(identity_element(a.context()), a) / mass;
}

struct EigenReport {
  Complex lambda{0.0, 0.0};
  double residual = 0.0;              // phi(a - lambda e, a - lambda e) / phi(e,e)
  double factorization_defect = 0.0;  // sup_b |phi(b,a) - lambda phi(b,e)| / phi(e,e)
  // the four equivalent statements, phi-side and dual-side, left and right slot
  std::array<double, 4> dual_defects{0.0, 0.0, 0.0, 0.0};
  double modulus_defect = 0.0;  // |phi(a,a)/phi(e,e) - |lambda|^2|
  bool hermitian_input = false;
  double reality_defect = 0.0;  // |Im lambda|, meaningful for hermitian input
  bool eigenstate = false;
  double tol = 0.0;
};

// Full diagnostic: residual and sup-over-basis characterizations, the dual
// form statements for a*, and the modulus identity. Sup defects are taken
// over the matrix-unit basis, so "for all b" is finitely checkable.
inline EigenReport is_eigenstate(const TraceForm& f, const Element& a, double tol = 1e-10) {
  detail::require_right(f, "is_eigenstate");
  const double mass = detail::form_mass(f, "is_eigenstate");
  const AlgebraContext& ctx = a.context();
  require_same_context(ctx, f.context(), "is_eigenstate");
  const int d = ctx.dim;

  EigenReport rep;
  rep.tol = tol;
  const Element e = identity_element(ctx);
  rep.lambda = f(e, a) / mass;
  rep.residual = eigen_residual(f, a, rep.lambda) / mass;

  const TraceForm psi = dual(f);
  const Element astar = adjoint(a);
  const Complex lam = rep.lambda;
  const Complex lamc = std::conj(lam);
  double d1 = 0.0, d2 = 0.0, d3 = 0.0, d4 = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const Element b(detail::matrix_unit(d, i, j), ctx);
      d1 = std::max(d1, std::abs(f(b, a) - lam * f(b, e)));
      d2 = std::max(d2, std::abs(f(a, b) - lamc * f(e, b)));
      d3 = std::max(d3, std::abs(psi(b, astar) - lamc * psi(b, e)));
      d4 = std::max(d4, std::abs(psi(astar, b) - lam * psi(e, b)));
    }
  }
  rep.factorization_defect = d1 / mass;
  rep.dual_defects = {d1 / mass, d2 / mass, d3 / mass, d4 / mass};
  rep.modulus_defect = std::abs(f(a, a).real() / mass - std::norm(lam));

  const double ascale = std::max(1.0, a.matrix().cwiseAbs().maxCoeff());
  rep.hermitian_input =
      (a.matrix() - a.matrix().adjoint()).cwiseAbs().maxCoeff() <= 1e-13 * ascale;
  rep.reality_defect = std::abs(lam.imag());
  rep.eigenstate = rep.residual <= tol;
  return rep;
}

// Canonical eigenstate with a prescribed point-spectrum value: the weight is
// the normalized projector onto ker(a - lambda e).
inline TraceForm eigenstate_construct(const Element& a, Complex lambda, double tol = 1e-8) {
  const AlgebraContext& ctx = a.context();
  const int d = ctx.dim;
  const Matrix shifted = a.matrix() - lambda * Matrix::Identity(d, d);
  Eigen::JacobiSVD<Matrix> svd(shifted, Eigen::ComputeFullV);
  const RealVector sv = svd.singularValues();
  const double scale = std::max({1.0, sv.size() ? sv(0) : 0.0, std::abs(lambda)});
  int kdim = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) <= tol * scale) ++kdim;
  if (kdim == 0)
    throw std::domain_error("eigenstate_construct: lambda is not in the point spectrum");
  const Matrix kernel = svd.matrixV().rightCols(kdim);
  Matrix proj = kernel * kernel.adjoint();
  proj *= static_cast<double>(d) / proj.trace().real();
  return TraceForm(proj, FormFlavor::right, ctx);
}

// Rank of the span of the forms, as vectors of weights.
inline int independence_rank(const std::vector<TraceForm>& forms) {
  if (forms.empty()) return 0;
  const AlgebraContext ctx = forms.front().context();
  const FormFlavor flavor = forms.front().flavor();
  const int d = ctx.dim;
  Matrix stack(static_cast<Eigen::Index>(forms.size()), static_cast<Eigen::Index>(d) * d);
  for (std::size_t k = 0; k < forms.size(); ++k) {
    require_same_context(forms[k].context(), ctx, "independence_rank");
    if (forms[k].flavor() != flavor)
      throw std::invalid_argument("independence_rank: mixed flavors");
    stack.row(static_cast<Eigen::Index>(k)) = detail::vec_rowmajor(forms[k].weight()).transpose();
  }
  Eigen::JacobiSVD<Matrix> svd(stack);
  const RealVector sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double thresh = std::max(stack.rows(), stack.cols()) * kEps * sv(0);
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > thresh) ++r;
  return r;
}

struct PolyEigenReport {
  Complex lambda{0.0, 0.0};
  Complex p_lambda{0.0, 0.0};
  double defect = 0.0;  // sup_b |phi(b, p(a)) - p(lambda) phi(b,e)| / phi(e,e)
  double growth = 1.0;  // sum_k |c_k| max(1, |a|_0)^k, the defect's natural scale
  bool pass = false;
};

// Polynomial extension: an eigenstate for a is one for p(a), with value
// p(lambda). Coefficients are ascending, p(t) = c_0 + c_1 t + ...
inline PolyEigenReport polynomial_eigen_check(const TraceForm& f, const Element& a,
                                              const std::vector<Complex>& coeffs,
                                              double tol = 1e-10) {
  detail::require_right(f, "polynomial_eigen_check");
  if (coeffs.empty()) throw std::invalid_argument("polynomial_eigen_check: empty polynomial");
  const double mass = detail::form_mass(f, "polynomial_eigen_check");
  const AlgebraContext& ctx = a.context();
  const int d = ctx.dim;
  const Element e = identity_element(ctx);

  PolyEigenReport rep;
  rep.lambda = eigenvalue_extract(f, a);

  Matrix pa = Matrix::Zero(d, d);
  Complex plam = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 0;) {  // Horner
    pa = pa * a.matrix() + coeffs[k] * Matrix::Identity(d, d);
    plam = plam * rep.lambda + coeffs[k];
  }
  rep.p_lambda = plam;

  const double anorm = std::max(1.0, operator_norm(a));
  double growth = 0.0, powk = 1.0;
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    growth += std::abs(coeffs[k]) * powk;
    powk *= anorm;
  }
  rep.growth = std::max(1.0, growth);

  const Element pae(pa, ctx);
  double sup = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const Element b(detail::matrix_unit(d, i, j), ctx);
      sup = std::max(sup, std::abs(f(b, pae) - plam * f(b, e)));
    }
  rep.defect = sup / mass;
  rep.pass = rep.defect <= tol * rep.growth;
  return rep;
}

}  // namespace sesqui
