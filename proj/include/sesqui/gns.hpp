#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sesqui/algebra.hpp"
#include "sesqui/eigenstate.hpp"
#include "sesqui/quon.hpp"
#include "sesqui/trace_form.hpp"

// GNS construction over a RIGHT trace form. The Gram matrix of the
// matrix-unit basis, G[(i,j),(k,l)] = phi(E_ij, E_kl) = delta_ik W(l,j)/d,
// is diagonalized; eigenvectors above the rank threshold span the quotient
// by the null space N_phi. With V the kept eigenvectors and Lambda their
// eigenvalues, the class of a has coordinates h(a) = Lambda^{1/2} V* vec(a),
// the left action is R(a) = Lambda^{1/2} V* L_a V Lambda^{-1/2}, and
// xi = h(e) is cyclic with <h(a), h(b)> = phi(a, b).

namespace sesqui {

namespace detail {

// Gram of the matrix-unit basis in row-major unit order; block-diagonal
// because tau(W E_ji E_kl) = delta_ik W(l,j)/d.
inline Matrix unit_gram(const TraceForm& f) {
  const int d = f.context().dim;
  const Matrix block = f.weight().transpose() / static_cast<double>(d);
  Matrix g = Matrix::Zero(static_cast<Eigen::Index>(d) * d, static_cast<Eigen::Index>(d) * d);
  for (int i = 0; i < d; ++i)
    g.block(static_cast<Eigen::Index>(i) * d, static_cast<Eigen::Index>(i) * d, d, d) = block;
  return g;
}

}  // namespace detail

class GnsModel {
 public:
  GnsModel(TraceForm f, Matrix gram, Matrix basis, RealVector eigs, double rank_tol)
      : form_(std::move(f)),
        gram_(std::move(gram)),
        basis_(std::move(basis)),
        eigs_(std::move(eigs)),
        rank_tol_(rank_tol) {
    const RealVector rt = eigs_.array().sqrt();
    to_coords_ = rt.asDiagonal() * basis_.adjoint();
    from_coords_ = basis_ * rt.cwiseInverse().asDiagonal();
    cyclic_ = to_coords_ * detail::vec_rowmajor(
                               Matrix::Identity(form_.context().dim, form_.context().dim));
  }

  const TraceForm& form() const { return form_; }
  const Matrix& gram() const { return gram_; }
  const RealVector& kept_eigenvalues() const { return eigs_; }
  double rank_tol() const { return rank_tol_; }
  int quotient_dim() const { return static_cast<int>(basis_.cols()); }
  const Vector& cyclic_vector() const { return cyclic_; }

  // coordinates of the classes of all matrix units; column (i*d + j) is
  // h(E_ij)
  const Matrix& unit_classes() const { return to_coords_; }

  Vector vector_of(const Element& a) const {
    require_same_context(a.context(), form_.context(), "GnsModel::vector_of");
    return to_coords_ * detail::vec_rowmajor(a.matrix());
  }

  Vector rep_apply(const Element& a, const Vector& v) const {
    const int d = form_.context().dim;
    const Matrix x = detail::unvec_rowmajor(from_coords_ * v, d);
    return to_coords_ * detail::vec_rowmajor(a.matrix() * x);
  }

  Matrix rep(const Element& a) const {
    const int d = form_.context().dim;
    const Eigen::Index r = basis_.cols();
    Matrix lifted(static_cast<Eigen::Index>(d) * d, r);
    for (Eigen::Index c = 0; c < r; ++c) {
      const Matrix x = detail::unvec_rowmajor(from_coords_.col(c), d);
      lifted.col(c) = detail::vec_rowmajor(a.matrix() * x);
    }
    return to_coords_ * lifted;
  }

  // columns R(E_ij) v over all matrix units, in row-major unit order;
  // E_ij X only selects row j of the lift, so column (i*d+j) is
  // to_coords[:, i*d..i*d+d) * X.row(j)^T
  Matrix unit_action(const Vector& v) const {
    const int d = form_.context().dim;
    const Matrix x = detail::unvec_rowmajor(from_coords_ * v, d);
    Matrix cols(to_coords_.rows(), static_cast<Eigen::Index>(d) * d);
    for (int i = 0; i < d; ++i) {
      const auto block = to_coords_.middleCols(static_cast<Eigen::Index>(i) * d, d);
      for (int j = 0; j < d; ++j)
        cols.col(static_cast<Eigen::Index>(i) * d + j) = block * x.row(j).transpose();
    }
    return cols;
  }

 private:
  TraceForm form_;
  Matrix gram_;
  Matrix basis_;
  RealVector eigs_;
  double rank_tol_;
  Matrix to_coords_;
  Matrix from_coords_;
  Vector cyclic_;
};

// rank_tol < 0 selects the default d^2 * eps (relative to the top Gram
// eigenvalue).
inline GnsModel build_gns(const TraceForm& f, double rank_tol = -1.0) {
  if (f.flavor() != FormFlavor::right)
    throw std::invalid_argument("build_gns: RIGHT-flavor form required");
  const int d = f.context().dim;
  const Matrix gram = detail::unit_gram(f);
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  if (es.info() != Eigen::Success) throw numerical_error("build_gns: eigensolver failed");
  const RealVector evals = es.eigenvalues();  // ascending
  const double top = evals(evals.size() - 1);
  if (top <= 0.0) throw std::domain_error("build_gns: zero form, trivial quotient");
  const double rel = rank_tol < 0.0 ? static_cast<double>(d) * d * kEps : rank_tol;
  const double thresh = rel * top;
  if (evals(0) < -10.0 * std::max(thresh, kEps * top))
    throw numerical_error("build_gns: Gram matrix has a significant negative eigenvalue");

  int r = 0;
  for (Eigen::Index i = 0; i < evals.size(); ++i)
    if (evals(i) > thresh) ++r;
  if (r == 0) throw std::domain_error("build_gns: zero form, trivial quotient");

  Matrix basis(gram.rows(), r);
  RealVector kept(r);
  for (int k = 0; k < r; ++k) {  // descending order
    const Eigen::Index src = evals.size() - 1 - k;
    basis.col(k) = es.eigenvectors().col(src);
    kept(k) = evals(src);
  }
  return GnsModel(f, gram, std::move(basis), std::move(kept), rel);
}

struct TransportReport {
  Complex lambda{0.0, 0.0};
  double form_residual = 0.0;  // phi(a - lambda e, a - lambda e) / phi(e,e)
  double rep_residual = 0.0;   // |R(a) xi - lambda xi|^2 / phi(e,e)
  double identity_defect = 0.0;
  bool form_eigenstate = false;
  bool rep_eigenstate = false;
};

// The eigenstate property transports through the construction: the form
// residual and the vector residual of the cyclic vector are the same number.
inline TransportReport gns_eigen_transport(const GnsModel& g, const Element& a,
                                           double tol = 1e-10) {
  const TraceForm& f = g.form();
  const double mass = detail::form_mass(f, "gns_eigen_transport");
  TransportReport rep;
  rep.lambda = eigenvalue_extract(f, a);
  rep.form_residual = eigen_residual(f, a, rep.lambda) / mass;
  const Vector w = g.rep_apply(a, g.cyclic_vector()) - rep.lambda * g.cyclic_vector();
  rep.rep_residual = w.squaredNorm() / mass;
  rep.identity_defect = std::abs(rep.form_residual - rep.rep_residual);
  rep.form_eigenstate = rep.form_residual <= tol;
  rep.rep_eigenstate = rep.rep_residual <= tol;
  return rep;
}

struct LadderVectors {
  GnsModel gns;
  std::vector<Vector> xi;  // xi_l = R(y0)^l xi, l = 0..levels
  // worst case over l of sup over unit pairs of
  // |phi_l(a,b) - <R(a) xi_l, R(b) xi_l>|, floored at scale |xi_l|^2
  double reconstruction_defect = 0.0;
};

inline LadderVectors xi_vectors(const QuonModel& m, int levels) {
  detail::require_depth(m, levels, "xi_vectors");
  GnsModel g = build_gns(vacuum_form(m));
  std::vector<Vector> xi(static_cast<std::size_t>(levels) + 1);
  xi[0] = g.cyclic_vector();
  for (int l = 1; l <= levels; ++l)
    xi[static_cast<std::size_t>(l)] = g.rep_apply(m.y0, xi[static_cast<std::size_t>(l) - 1]);

  double worst = 0.0;
  for (int l = 0; l <= levels; ++l) {
    const Matrix gram_l = detail::unit_gram(ladder_form(m, l));
    const Matrix cols = g.unit_action(xi[static_cast<std::size_t>(l)]);
    const Matrix inner = cols.adjoint() * cols;
    const double scale = std::max(1.0, xi[static_cast<std::size_t>(l)].squaredNorm());
    worst = std::max(worst, (inner - gram_l).cwiseAbs().maxCoeff() / scale);
  }
  return LadderVectors{std::move(g), std::move(xi), worst};
}

struct OverlapReport {
  Matrix overlaps;  // <xi_k, xi_l>
  // sup |<xi_k, xi_l> - phi_0(y0^k, y0^l)| over pairs, floored at the norms
  double pairing_defect = 0.0;
  double max_normalized_offdiag = 0.0;  // |off| / max(1, sqrt(diag_k diag_l))
};

inline OverlapReport overlap_matrix(const LadderVectors& lv, const QuonModel& m) {
  const int n = static_cast<int>(lv.xi.size());
  const TraceForm phi0 = vacuum_form(m);
  OverlapReport rep;
  rep.overlaps = Matrix(n, n);
  std::vector<Matrix> ypow(static_cast<std::size_t>(n));
  ypow[0] = Matrix::Identity(m.ctx.dim, m.ctx.dim);
  for (int l = 1; l < n; ++l) ypow[static_cast<std::size_t>(l)] = ypow[l - 1u] * m.y0.matrix();

  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l)
      rep.overlaps(k, l) = lv.xi[static_cast<std::size_t>(k)].dot(lv.xi[static_cast<std::size_t>(l)]);

  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) {
      const Complex direct = phi0(Element(ypow[static_cast<std::size_t>(k)], m.ctx),
                                  Element(ypow[static_cast<std::size_t>(l)], m.ctx));
      const double floor = std::max(
          1.0, std::sqrt(rep.overlaps(k, k).real() * rep.overlaps(l, l).real()));
      rep.pairing_defect =
          std::max(rep.pairing_defect, std::abs(rep.overlaps(k, l) - direct) / floor);
      if (k != l)
        rep.max_normalized_offdiag =
            std::max(rep.max_normalized_offdiag, std::abs(rep.overlaps(k, l)) / floor);
    }
  }
  return rep;
}

struct BiorthReport {
  Matrix overlaps;  // <xi_k, nu_l>
  double max_normalized_offdiag = 0.0;
  double diag_defect = 0.0;  // sup_l |<xi_l, nu_l> - beta_l!| / max(1, beta_l!)
};

// Biorthogonal pairing of the xi ladder with the dual ladder nu_l = R(x0*)^l nu_0,
/// realized in the same representation with a second cyclic vector: nu_0 is the
// class of the element mapping the x0 vacuum ray onto the y0* vacuum ray.
inline BiorthReport biorthogonality_check(const QuonModel& m, int levels) {
  if (m.hermitian)
    throw std::invalid_argument(
        "biorthogonality_check: pseudo model required; the hermitian ladder is orthogonal");
  detail::require_depth(m, levels, "biorthogonality_check");

  auto kernel_deficiency = [](const Matrix& x) {
    Eigen::JacobiSVD<Matrix> svd(x);
    const RealVector sv = svd.singularValues();
    int k = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) <= 1e-8 * sv(0)) ++k;
    return k;
  };
  if (kernel_deficiency(m.x0.matrix()) != 1)
    throw std::domain_error("biorthogonality_check: ker(x0) is not one-dimensional");
  if (kernel_deficiency(m.y0.matrix().adjoint()) != 1)
    throw std::domain_error("biorthogonality_check: ker(y0*) is not one-dimensional");

  const Vector u = detail::vacuum_ray(m.similarity);             // spans ker(x0)
  const Vector w = detail::vacuum_ray(m.similarity_inv.adjoint());  // spans ker(y0*)

  GnsModel g = build_gns(vacuum_form(m));
  const std::size_t n = static_cast<std::size_t>(levels) + 1;
  std::vector<Vector> xi(n), nu(n);
  xi[0] = g.cyclic_vector();
  nu[0] = g.vector_of(Element(w * u.adjoint(), m.ctx));
  // pairing normalization <xi_0, nu_0> = 1
  const Complex c0 = xi[0].dot(nu[0]);
  if (std::abs(c0) <= 1e-10)
    throw numerical_error("biorthogonality_check: vacuum pairing is degenerate");
  nu[0] /= c0;
  const Element xstar = adjoint(m.x0);
  for (std::size_t l = 1; l < n; ++l) {
    xi[l] = g.rep_apply(m.y0, xi[l - 1]);
    nu[l] = g.rep_apply(xstar, nu[l - 1]);
  }

  const BetaSequence seq = beta_sequence(m.q, levels);
  BiorthReport rep;
  rep.overlaps = Matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l)
      rep.overlaps(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) =
          xi[k].dot(nu[l]);

  for (std::size_t k = 0; k < n; ++k) {
    const double target = seq.factorials[k];
    const double dk = std::abs(rep.overlaps(static_cast<Eigen::Index>(k),
                                            static_cast<Eigen::Index>(k)) -
                               target);
    rep.diag_defect = std::max(rep.diag_defect, dk / std::max(1.0, std::abs(target)));
    for (std::size_t l = 0; l < n; ++l) {
      if (k == l) continue;
      const double floor = std::max(
          1.0, std::sqrt(std::abs(rep.overlaps(static_cast<Eigen::Index>(k),
                                               static_cast<Eigen::Index>(k))) *
                         std::abs(rep.overlaps(static_cast<Eigen::Index>(l),
                                               static_cast<Eigen::Index>(l)))));
      rep.max_normalized_offdiag =
          std::max(rep.max_normalized_offdiag,
                   std::abs(rep.overlaps(static_cast<Eigen::Index>(k),
                                         static_cast<Eigen::Index>(l))) /
                       floor);
    }
  }
  return rep;
}

}  // namespace sesqui
