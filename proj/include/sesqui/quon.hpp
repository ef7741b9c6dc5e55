#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sesqui/algebra.hpp"
#include "sesqui/eigenstate.hpp"
#include "sesqui/trace_form.hpp"

// Truncated quon models. The canonical lowering matrix a_q has gamma_n on
// the superdiagonal, gamma_n^2 = (1 - q^{n+1})/(1 - q) (n+1 at q = 1), and
// the pseudo pair x0 = S a_q S^-1, y0 = S a_q^dag S^-1 satisfies
// x0 y0 - q y0 x0 = e on levels 0..N-1; the truncation shows up only in the
// top diagonal entry. Ladder forms phi_l have weights W_l = y0^l W_0 y0*^l
// over the vacuum weight W_0, and are eigenstates of the number element
// y0 x0 with eigenvalue beta_l.

namespace sesqui {

// beta_0 = 0, beta_l = 1 + q beta_{l-1}; the recursion is the definition,
// the closed form (1 - q^l)/(1 - q) is a cross-check
inline double beta(double q, int l) {
  if (l < 0) throw std::invalid_argument("beta: l must be >= 0");
  double b = 0.0;
  for (int i = 0; i < l; ++i) b = 1.0 + q * b;
  return b;
}

inline double gamma_sq(double q, int n) {
  if (n < 0) throw std::invalid_argument("gamma_sq: n must be >= 0");
  if (q == 1.0) return static_cast<double>(n + 1);
  return (1.0 - std::pow(q, n + 1)) / (1.0 - q);
}

struct BetaSequence {
  double q = 0.0;
  std::vector<double> values;      // beta_0 .. beta_L
  std::vector<double> factorials;  // beta_0! = 1, beta_l! = beta_1 ... beta_l
};

inline BetaSequence beta_sequence(double q, int levels) {
  if (levels < 0) throw std::invalid_argument("beta_sequence: levels must be >= 0");
  BetaSequence seq;
  seq.q = q;
  seq.values.resize(levels + 1);
  seq.factorials.resize(levels + 1);
  seq.values[0] = 0.0;
  seq.factorials[0] = 1.0;
  for (int l = 1; l <= levels; ++l) {
    seq.values[l] = 1.0 + q * seq.values[l - 1];
    seq.factorials[l] = seq.factorials[l - 1] * seq.values[l];
  }
  return seq;
}

struct QuonModel {
  double q = 0.0;
  int levels = 0;  // N; the algebra acts on N+1 levels
  AlgebraContext ctx;
  Element x0;  // lowering
  Element y0;  // raising
  Matrix similarity;
  Matrix similarity_inv;
  bool hermitian = true;
  double similarity_cond = 1.0;
  int valid_depth = 0;  // N - 2, the largest trustworthy ladder index
  RealVector gamma;     // gamma_0 .. gamma_{N-1}
};

inline QuonModel build_quon(double q, int levels, double p,
                            const std::optional<Matrix>& similarity = std::nullopt) {
  if (std::isnan(q) || q < -1.0 || q > 1.0)
    throw std::invalid_argument("build_quon: q must lie in [-1, 1]");
  if (levels < 2) throw std::invalid_argument("build_quon: need at least 2 levels");
  const int d = levels + 1;
  const AlgebraContext ctx = make_context(d, p);

  RealVector gam(levels);
  Matrix aq = Matrix::Zero(d, d);
  for (int n = 0; n < levels; ++n) {
    gam(n) = std::sqrt(gamma_sq(q, n));
    aq(n, n + 1) = gam(n);
  }

  Matrix s = Matrix::Identity(d, d);
  Matrix sinv = s;
  bool hermitian = true;
  double cond = 1.0;
  if (similarity) {
    s = *similarity;
    if (s.rows() != d || s.cols() != d)
      throw std::invalid_argument("build_quon: similarity shape must be (N+1) x (N+1)");
    Eigen::JacobiSVD<Matrix> svd(s);
    const RealVector sv = svd.singularValues();
    if (sv(sv.size() - 1) <= 1e-12 * sv(0))
      throw std::invalid_argument("build_quon: similarity is singular");
    cond = sv(0) / sv(sv.size() - 1);
    sinv = s.fullPivLu().inverse();
    hermitian = (s - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() == 0.0;
  }

  Element x0(s * aq * sinv, ctx);
  Element y0(s * aq.adjoint() * sinv, ctx);
  return QuonModel{q,  levels, ctx,  std::move(x0), std::move(y0), std::move(s),
                   std::move(sinv), hermitian, cond, levels - 2, std::move(gam)};
}

// Diagonal of S^-1 (x0 y0 - q y0 x0 - e) S, level-resolved. Zero on levels
// 0..N-1; level N carries the truncation, -(1 + q gamma_{N-1}^2).
inline RealVector qmutator_defect(const QuonModel& m) {
  const Matrix mut = m.x0.matrix() * m.y0.matrix() - m.q * m.y0.matrix() * m.x0.matrix() -
                     Matrix::Identity(m.ctx.dim, m.ctx.dim);
  const Matrix canonical = m.similarity_inv * mut * m.similarity;
  return canonical.diagonal().real();
}

namespace detail {

inline Vector vacuum_ray(const Matrix& s) {
  Vector u = s.col(0);  // image of the ground level under the similarity
  const double n = u.norm();
  if (n == 0.0) throw numerical_error("vacuum ray has zero norm");
  return u / n;
}

}  // namespace detail

// Vacuum form: weight (N+1) u u* on the ray u spanning ker(x0). The ray is
// taken as S * (ground level), which stays correct at q = -1 where the
// truncated lowering matrix annihilates every even level.
inline TraceForm vacuum_form(const QuonModel& m) {
  const Vector u = detail::vacuum_ray(m.similarity);
  const double residual = (m.x0.matrix() * u).norm();
  const double scale = std::max(1.0, m.x0.matrix().cwiseAbs().maxCoeff());
  if (residual > 1e-10 * scale)
    throw numerical_error("vacuum_form: constructed ray is not annihilated by x0");
  Matrix w = static_cast<double>(m.ctx.dim) * (u * u.adjoint());
  return TraceForm(w, FormFlavor::right, m.ctx);
}

namespace detail {

inline void require_depth(const QuonModel& m, int l, const char* where) {
  if (l < 0) throw std::invalid_argument(std::string(where) + ": negative ladder index");
  if (l > m.valid_depth)
    throw std::out_of_range(std::string(where) + ": ladder index exceeds the valid depth N-2");
}

inline Matrix ladder_weight(const QuonModel& m, const Matrix& w0, int l) {
  Matrix w = w0;
  for (int i = 0; i < l; ++i)
    w = (m.y0.matrix() * w * m.y0.matrix().adjoint()).eval();
  return w;
}

}  // namespace detail

inline TraceForm ladder_form(const QuonModel& m, int l) {
  detail::require_depth(m, l, "ladder_form");
  const Matrix w = detail::ladder_weight(m, vacuum_form(m).weight(), l);
  return TraceForm(w, FormFlavor::right, m.ctx);
}

namespace detail {

// sup over matrix-unit pairs of the two-weight mismatch, floored so the
// bound stays meaningful when the ladder values grow past O(1)
inline double floored_weight_defect(const Matrix& delta, double scale) {
  return unit_pair_sup(delta) / std::max(1.0, std::abs(scale));
}

}  // namespace detail

// Number-eigenstate defect of phi_l: sup_b |phi_l(b, n0) - beta_l phi_l(b, e)|
// with n0 = y0 x0, relative to the ladder mass phi_l(e, e) (floored at 1).
inline double number_eigen_defect(const QuonModel& m, int l) {
  detail::require_depth(m, l, "number_eigen_defect");
  const Matrix wl = ladder_form(m, l).weight();
  const Matrix n0 = m.y0.matrix() * m.x0.matrix();
  const double bl = beta(m.q, l);
  const Matrix delta =
      (n0 - bl * Matrix::Identity(m.ctx.dim, m.ctx.dim)) * wl;
  return detail::floored_weight_defect(delta, tau(wl).real());
}

// Lowering identity defect: phi_l(a x0, b x0) = beta_l^2 phi_{l-1}(a, b),
// i.e. x0 W_l x0* = beta_l^2 W_{l-1} as weights.
inline double lowering_defect(const QuonModel& m, int l) {
  if (l < 1) throw std::invalid_argument("lowering_defect: l must be >= 1");
  detail::require_depth(m, l, "lowering_defect");
  const Matrix wl = ladder_form(m, l).weight();
  const Matrix wprev = ladder_form(m, l - 1).weight();
  const double bl = beta(m.q, l);
  const Matrix delta = m.x0.matrix() * wl * m.x0.matrix().adjoint() - (bl * bl) * wprev;
  return detail::floored_weight_defect(delta, bl * bl * tau(wprev).real());
}

struct EtaLadder {
  TraceForm form;             // eta_l
  double number_defect = 0;   // against the conjugate number element (y0 x0)*
  double lowering_defect = 0; // 0 at l = 0 where the identity is vacuous
};

// eta ladder: the phi ladder of the conjugate model S -> S^-*. Its vacuum
// ray spans ker(y0*) and the weights obey V_l = (x0*)^l V_0 x0^l.
inline EtaLadder eta_ladder(const QuonModel& m, int l) {
  detail::require_depth(m, l, "eta_ladder");
  const int d = m.ctx.dim;
  const Vector w0ray = detail::vacuum_ray(m.similarity_inv.adjoint());
  {
    const double residual = (m.y0.matrix().adjoint() * w0ray).norm();
    const double scale = std::max(1.0, m.y0.matrix().cwiseAbs().maxCoeff());
    if (residual > 1e-10 * scale)
      throw numerical_error("eta_ladder: vacuum ray is not annihilated by y0*");
  }
  Matrix v = static_cast<double>(d) * (w0ray * w0ray.adjoint());
  Matrix vprev = v;
  const Matrix xstar = m.x0.matrix().adjoint();
  for (int i = 0; i < l; ++i) {
    vprev = v;
    v = (xstar * v * xstar.adjoint()).eval();
  }
  const double bl = beta(m.q, l);
  const Matrix n0c = (m.y0.matrix() * m.x0.matrix()).adjoint();
  const Matrix num_delta = (n0c - bl * Matrix::Identity(d, d)) * v;
  double lower = 0.0;
  if (l >= 1) {
    const Matrix low_delta = m.y0.matrix().adjoint() * v * m.y0.matrix() - (bl * bl) * vprev;
    lower = detail::floored_weight_defect(low_delta, bl * bl * tau(vprev).real());
  }
  return EtaLadder{TraceForm(v, FormFlavor::right, m.ctx),
                   detail::floored_weight_defect(num_delta, tau(v).real()), lower};
}

struct QuonNormReport {
  double op_norm = 0.0;     // ||a_q||_0 = max gamma_n, exact for the bidiagonal model
  double op_norm_sq = 0.0;
  double bound_sq = 0.0;    // 2/(1-q) for q < 1, infinite at q = 1
  bool within_bound = true;
  double model_op_norm = 0.0;  // ||x0||_0 of the (possibly conjugated) model
};

inline QuonNormReport quon_norm_report(const QuonModel& m) {
  QuonNormReport rep;
  rep.op_norm = m.gamma.maxCoeff();
  rep.op_norm_sq = rep.op_norm * rep.op_norm;
  rep.bound_sq = m.q < 1.0 ? 2.0 / (1.0 - m.q) : kInfinity;
  rep.within_bound = rep.op_norm_sq <= rep.bound_sq * (1.0 + 1e-12);
  rep.model_op_norm = m.hermitian ? rep.op_norm : operator_norm(m.x0);
  return rep;
}

}  // namespace sesqui
