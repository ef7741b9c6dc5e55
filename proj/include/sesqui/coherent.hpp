#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "sesqui/algebra.hpp"
#include "sesqui/quon.hpp"
#include "sesqui/trace_form.hpp"

// Coherent superpositions of the ladder forms,
//   Phi_z(a,b) = sum_l z^l phi_l(a,b) / (beta_l!)^2.
// The scalar radius rho' = lim beta_{l+1}^2 = 1/(1-q)^2 for |q| < 1
// (infinite at q = 1) controls the coefficient decay; in the operator
// argument the series is tamed by |phi_l(a,b)| <= gamma_0 |a|_p |b|_p
// (|z| |y0|_0^2)^l / (beta_l!)^2, which is the majorant used for tails.
// q = -1 is rejected: beta_2 = 0 makes the coefficients collapse.

namespace sesqui {

inline constexpr double kCoherentGuard = 0.95;  // accepted |z| <= 0.95 rho

struct CoherentRadius {
  double rho_prime = 0.0;    // lim beta_{l+1}^2
  double rho = 0.0;          // rho_prime / |y0|_0^2, the operator-argument radius
  double rho_prime_linear_variant = 0.0;  // 1/(1-q); inconsistent with the
                                          // defining limit, reported alongside
  double ratio_probe = 0.0;  // beta_101^2, for the ratio diagnostic
};

inline CoherentRadius coherent_radius(const QuonModel& m) {
  if (m.q == -1.0)
    throw std::domain_error("coherent_radius: collapse at q = -1 (beta_2 = 0)");
  CoherentRadius r;
  const double b101 = beta(m.q, 101);
  r.ratio_probe = b101 * b101;
  if (m.q == 1.0) {
    r.rho_prime = kInfinity;
    r.rho = kInfinity;
    r.rho_prime_linear_variant = kInfinity;
    return r;
  }
  r.rho_prime = 1.0 / ((1.0 - m.q) * (1.0 - m.q));
  r.rho_prime_linear_variant = 1.0 / (1.0 - m.q);
  const double y = operator_norm(m.y0);
  r.rho = r.rho_prime / (y * y);
  return r;
}

struct CoherentValue {
  Complex value{0.0, 0.0};
  int order = 0;                   // summation truncated after this ladder index
  double tail_bound = 0.0;         // majorant mass beyond `order`
  double truncation_residue = 0.0; // majorant mass the depth cap N-2 leaves unreachable
};

namespace detail {

struct MajorantTail {
  int order_eps = 0;     // smallest L with tail(L) <= eps
  std::vector<double> tails;  // tails[L] = sum_{l > L} m_l, L = 0..order_eps (and beyond to depth)
  double tail_at(int L) const {
    return L < static_cast<int>(tails.size()) ? tails[static_cast<std::size_t>(L)] : 0.0;
  }
};

// Scalar majorant m_l = c r^l / (beta_l!)^2 with r = |z| |y0|_0^2; beta is a
// scalar recursion, so tails extend past the matrix depth.
inline MajorantTail majorant_tail(double q, double r, double c, double eps, int depth_cap) {
  std::vector<double> terms;
  terms.push_back(c);  // l = 0
  double bl = 0.0, fact = 1.0, rpow = 1.0;
  const double floor_term = std::max(c, 1.0) * 1e-260;
  for (int l = 1; l <= 200000; ++l) {
    bl = 1.0 + q * bl;
    fact *= bl;
    rpow *= r;
    const double t = c * rpow / (fact * fact);
    terms.push_back(t);
    if (t < floor_term && l > depth_cap + 2) break;
  }
  // suffix sums, smallest-first for accuracy
  std::vector<double> tails(terms.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = terms.size(); i-- > 1;) {
    acc += terms[i];
    tails[i - 1] = acc;
  }
  MajorantTail out;
  int L = 0;
  while (L < static_cast<int>(tails.size()) - 1 && tails[static_cast<std::size_t>(L)] > eps) ++L;
  out.order_eps = L;
  out.tails = std::move(tails);
  return out;
}

inline void validate_coherent_args(const QuonModel& m, Complex z, double eps,
                                   const CoherentRadius& rad) {
  if (!(eps > 0.0) || std::isinf(eps))
    throw std::invalid_argument("coherent evaluation: eps must be positive and finite");
  if (!std::isinf(rad.rho) && std::abs(z) > kCoherentGuard * rad.rho)
    throw std::domain_error("coherent evaluation: |z| exceeds the guarded radius 0.95 rho");
  (void)m;
}

}  // namespace detail

// Weight of the truncated coherent form: sum_{l <= order} z^l W_l/(beta_l!)^2.
// Complex z makes this a plain matrix, not a TraceForm weight.
inline Matrix coherent_weight(const QuonModel& m, Complex z, int order) {
  detail::require_depth(m, order, "coherent_weight");
  const BetaSequence seq = beta_sequence(m.q, order);
  Matrix w = vacuum_form(m).weight();
  Matrix acc = w;  // l = 0 term
  Complex zpow = 1.0;
  for (int l = 1; l <= order; ++l) {
    w = (m.y0.matrix() * w * m.y0.matrix().adjoint()).eval();
    zpow *= z;
    const double f = seq.factorials[static_cast<std::size_t>(l)];
    acc += (zpow / (f * f)) * w;
  }
  return acc;
}

inline CoherentValue evaluate_coherent(const QuonModel& m, Complex z, const Element& a,
                                       const Element& b, double eps) {
  const CoherentRadius rad = coherent_radius(m);
  detail::validate_coherent_args(m, z, eps, rad);
  const double ynorm = operator_norm(m.y0);
  const double c = continuity_constant(vacuum_form(m)) * ambient_norm(a) * ambient_norm(b);
  const detail::MajorantTail mt =
      detail::majorant_tail(m.q, std::abs(z) * ynorm * ynorm, c, eps, m.valid_depth);

  CoherentValue out;
  out.order = std::min(mt.order_eps, m.valid_depth);
  out.tail_bound = mt.tail_at(out.order);
  out.truncation_residue = mt.order_eps > m.valid_depth ? mt.tail_at(m.valid_depth) : 0.0;
  const Matrix omega = coherent_weight(m, z, out.order);
  out.value = tau(omega * a.matrix().adjoint() * b.matrix());
  return out;
}

struct CoherentLoweringReport {
  double defect = 0.0;  // sup over matrix-unit pairs, scale-floored
  int order = 0;
  double tail_bound = 0.0;
  double truncation_residue = 0.0;
};

// Lowering identity Phi_z(a x0, b x0) = z Phi_z(a,b) at matched truncation:
// the left side through order L pairs term-by-term with the right side
// through L-1, which is how the telescoping beta_l^2/(beta_l!)^2 works.
inline CoherentLoweringReport coherent_lowering_defect(const QuonModel& m, Complex z,
                                                       double eps) {
  const CoherentRadius rad = coherent_radius(m);
  detail::validate_coherent_args(m, z, eps, rad);
  const double ynorm = operator_norm(m.y0);
  const double c = continuity_constant(vacuum_form(m));
  const detail::MajorantTail mt =
      detail::majorant_tail(m.q, std::abs(z) * ynorm * ynorm, c, eps, m.valid_depth);

  CoherentLoweringReport rep;
  rep.order = std::min(mt.order_eps, m.valid_depth);
  rep.tail_bound = mt.tail_at(rep.order);
  rep.truncation_residue = mt.order_eps > m.valid_depth ? mt.tail_at(m.valid_depth) : 0.0;

  const Matrix lhs_weight = coherent_weight(m, z, rep.order);
  const Matrix rhs_weight = rep.order >= 1 ? coherent_weight(m, z, rep.order - 1)
                                           : Matrix::Zero(m.ctx.dim, m.ctx.dim).eval();
  const Matrix delta =
      m.x0.matrix() * lhs_weight * m.x0.matrix().adjoint() - z * rhs_weight;
  const double scale = std::abs(z) * detail::unit_pair_sup(rhs_weight);
  rep.defect = detail::unit_pair_sup(delta) / std::max(1.0, scale);
  return rep;
}

}  // namespace sesqui
