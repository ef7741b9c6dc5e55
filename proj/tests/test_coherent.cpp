#include <catch2/catch_amalgamated.hpp>

#include "sesqui/coherent.hpp"

using namespace sesqui;

TEST_CASE("radius values across the q range") {
  const CoherentRadius r5 = coherent_radius(build_quon(0.5, 8, 2.0));
  REQUIRE(r5.rho_prime == 4.0);
  REQUIRE(r5.rho_prime_linear_variant == 2.0);
  // |y0|_0^2 = beta_8 = 1.9921875, so rho = 4 / 1.9921875
  REQUIRE(std::abs(r5.rho - 2.007843137254902) < 1e-14);
  REQUIRE(std::abs(r5.ratio_probe / r5.rho_prime - 1.0) < 0.01);

  const CoherentRadius r0 = coherent_radius(build_quon(0.0, 6, 2.0));
  REQUIRE(r0.rho_prime == 1.0);
  REQUIRE(r0.rho == 1.0);

  const CoherentRadius r1 = coherent_radius(build_quon(1.0, 6, 2.0));
  REQUIRE(std::isinf(r1.rho_prime));
  REQUIRE(std::isinf(r1.rho));
  REQUIRE(std::isinf(r1.rho_prime_linear_variant));

  REQUIRE_THROWS_AS(coherent_radius(build_quon(-1.0, 6, 2.0)), std::domain_error);
}

TEST_CASE("argument validation") {
  const QuonModel m = build_quon(0.0, 6, 2.0);  // rho = 1
  const Element e = identity_element(m.ctx);
  REQUIRE_THROWS_AS(evaluate_coherent(m, Complex(0.96), e, e, 1e-6), std::domain_error);
  REQUIRE_NOTHROW(evaluate_coherent(m, Complex(0.9), e, e, 1e-6));
  REQUIRE_THROWS_AS(evaluate_coherent(m, Complex(0.3), e, e, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(evaluate_coherent(m, Complex(0.3), e, e, -1.0), std::invalid_argument);

  const QuonModel mf = build_quon(-1.0, 6, 2.0);
  const Element ef = identity_element(mf.ctx);
  REQUIRE_THROWS_AS(evaluate_coherent(mf, Complex(0.0), ef, ef, 1e-6), std::domain_error);
  REQUIRE_THROWS_AS(coherent_lowering_defect(mf, Complex(0.0), 1e-6), std::domain_error);
}

TEST_CASE("z = 0 reduces to the vacuum form") {
  const QuonModel m = build_quon(0.5, 8, 2.0);
  const TraceForm phi0 = vacuum_form(m);
  Matrix am(m.ctx.dim, m.ctx.dim), bm(m.ctx.dim, m.ctx.dim);
  am.setZero();
  bm.setZero();
  am(0, 3) = Complex(1.0, 2.0);
  am(4, 4) = Complex(0.0, -1.0);
  bm(0, 0) = Complex(2.0, 0.5);
  bm(5, 2) = Complex(-1.0, 1.0);
  const Element a(am, m.ctx), b(bm, m.ctx);
  const CoherentValue v = evaluate_coherent(m, Complex(0.0), a, b, 1e-8);
  REQUIRE(v.order == 0);
  REQUIRE(v.truncation_residue == 0.0);
  REQUIRE(std::abs(v.value - phi0(a, b)) < 1e-15);
}

TEST_CASE("the truncated weight accumulates the ladder") {
  const QuonModel m = build_quon(0.0, 6, 2.0);
  const Matrix w0 = coherent_weight(m, Complex(0.3), 0);
  REQUIRE((w0 - vacuum_form(m).weight()).cwiseAbs().maxCoeff() < 1e-15);
  // at q = 0 every beta factorial is 1 and every ladder mass is 1
  const Matrix w2 = coherent_weight(m, Complex(0.3), 2);
  REQUIRE(std::abs(tau(w2) - Complex(1.39)) < 1e-14);
}

TEST_CASE("geometric series at q = 0") {
  const QuonModel m = build_quon(0.0, 12, 2.0);
  const Element e = identity_element(m.ctx);
  const Complex z(0.3);
  const CoherentValue v = evaluate_coherent(m, z, e, e, 1e-2);
  REQUIRE(v.order < m.valid_depth);  // genuine eps-truncation, no depth clipping
  REQUIRE(v.truncation_residue == 0.0);
  Complex partial = 0.0, zp = 1.0;
  for (int l = 0; l <= v.order; ++l) {
    partial += zp;  // phi_l(e,e) = beta_l! = 1 and the series weight divides it once
    zp *= z;
  }
  REQUIRE(std::abs(v.value - partial) < 1e-14);
  // the dropped remainder is dominated by the reported tail bound
  Complex full = partial;
  for (int l = v.order + 1; l <= m.valid_depth; ++l) {
    full += zp;
    zp *= z;
  }
  REQUIRE(std::abs(full - v.value) <= v.tail_bound + 1e-15);
}

TEST_CASE("scalar series oracle at q = 0.5") {
  const QuonModel m = build_quon(0.5, 12, 2.0);
  const Element e = identity_element(m.ctx);
  const Complex z(0.2, 0.1);
  const CoherentValue v = evaluate_coherent(m, z, e, e, 1e-3);
  // independent scalar sum: Phi_z(e,e) = sum z^l / beta_l!
  Complex oracle = 0.0, zp = 1.0;
  double bl = 0.0, fact = 1.0;
  for (int l = 0; l <= v.order; ++l) {
    if (l > 0) {
      bl = 1.0 + 0.5 * bl;
      fact *= bl;
      zp *= z;
    }
    oracle += zp / fact;
  }
  REQUIRE(std::abs(v.value - oracle) < 1e-12);
  REQUIRE(v.truncation_residue == 0.0);
}

TEST_CASE("depth-limited summation reports the unreachable mass") {
  const QuonModel m = build_quon(0.9, 8, 2.0);
  const CoherentRadius rad = coherent_radius(m);
  const Element e = identity_element(m.ctx);
  const CoherentValue v = evaluate_coherent(m, Complex(0.3 * rad.rho), e, e, 1e-8);
  REQUIRE(v.order == m.valid_depth);
  REQUIRE(v.truncation_residue > 0.0);
}

TEST_CASE("matched-truncation lowering defect is tiny inside the disc") {
  const QuonModel m5 = build_quon(0.5, 10, 2.0);
  const CoherentLoweringReport r5 = coherent_lowering_defect(m5, Complex(0.3), 1e-8);
  REQUIRE(r5.defect < 1e-10);

  const QuonModel m1 = build_quon(1.0, 10, 2.0);
  const CoherentLoweringReport r1 = coherent_lowering_defect(m1, Complex(2.0), 1e-8);
  REQUIRE(r1.defect < 1e-10);

  Matrix s = Matrix::Identity(11, 11);
  for (int i = 0; i < 11; ++i) s(i, i) = 1.0 + 0.15 * i;
  const QuonModel mp = build_quon(0.5, 10, 2.0, s);
  const CoherentLoweringReport rp = coherent_lowering_defect(mp, Complex(0.3), 1e-8);
  REQUIRE(rp.defect < 1e-10);
}
