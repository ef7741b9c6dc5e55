#include <catch2/catch_amalgamated.hpp>

#include "sesqui/quon.hpp"

using namespace sesqui;

TEST_CASE("beta recursion values") {
  REQUIRE(beta(0.5, 0) == 0.0);
  REQUIRE(beta(0.5, 1) == 1.0);
  REQUIRE(std::abs(beta(0.5, 2) - 1.5) < 1e-16);
  REQUIRE(std::abs(beta(0.5, 3) - 1.75) < 1e-16);
  REQUIRE(beta(1.0, 5) == 5.0);
  REQUIRE(std::abs(beta(-1.0, 2)) < 1e-16);
  REQUIRE(std::abs(beta(-1.0, 3) - 1.0) < 1e-16);
}

TEST_CASE("gamma squared closed form") {
  REQUIRE(gamma_sq(0.5, 0) == 1.0);
  REQUIRE(std::abs(gamma_sq(0.5, 1) - 1.5) < 1e-15);
  REQUIRE(std::abs(gamma_sq(0.5, 2) - 1.75) < 1e-15);
  REQUIRE(gamma_sq(1.0, 3) == 4.0);
  REQUIRE(std::abs(gamma_sq(-1.0, 1)) < 1e-16);
  // bridge to the recursion
  for (double q : {-1.0, -0.5, 0.0, 0.5, 0.9, 1.0})
    for (int n = 0; n < 20; ++n)
      REQUIRE(std::abs(gamma_sq(q, n) - beta(q, n + 1)) <
              1e-14 * std::max(1.0, std::abs(beta(q, n + 1))));
}

TEST_CASE("beta sequence collects values and factorials") {
  const BetaSequence seq = beta_sequence(0.5, 4);
  REQUIRE(seq.values.size() == 5);
  REQUIRE(seq.factorials.size() == 5);
  REQUIRE(seq.values[4] == 1.875);
  REQUIRE(seq.factorials[0] == 1.0);
  REQUIRE(seq.factorials[2] == 1.5);
  REQUIRE(std::abs(seq.factorials[3] - 2.625) < 1e-15);
  REQUIRE(std::abs(seq.factorials[4] - 4.921875) < 1e-15);
}

TEST_CASE("model construction and validation") {
  REQUIRE_THROWS_AS(build_quon(1.5, 4, 2.0), std::invalid_argument);
  REQUIRE_THROWS_AS(build_quon(-1.2, 4, 2.0), std::invalid_argument);
  REQUIRE_THROWS_AS(build_quon(0.5, 1, 2.0), std::invalid_argument);
  REQUIRE_THROWS_AS(build_quon(0.5, 4, 1.0), std::invalid_argument);

  const QuonModel m = build_quon(0.5, 2, 2.0);
  REQUIRE(m.ctx.dim == 3);
  REQUIRE(m.valid_depth == 0);
  REQUIRE(m.hermitian);
  REQUIRE(m.similarity_cond == 1.0);
  // superdiagonal ladder entries gamma_0 = 1, gamma_1 = sqrt(1.5)
  REQUIRE(std::abs(m.x0.matrix()(0, 1) - Complex(1.0)) < 1e-15);
  REQUIRE(std::abs(m.x0.matrix()(1, 2) - Complex(1.224744871391589)) < 1e-15);
  REQUIRE(std::abs(m.x0.matrix()(2, 2)) == 0.0);
  REQUIRE((m.y0.matrix() - m.x0.matrix().adjoint()).cwiseAbs().maxCoeff() == 0.0);

  Matrix sing = Matrix::Zero(3, 3);
  sing(0, 0) = 1.0;
  REQUIRE_THROWS_AS(build_quon(0.5, 2, 2.0, sing), std::invalid_argument);
  REQUIRE_THROWS_AS(build_quon(0.5, 2, 2.0, Matrix::Identity(4, 4)), std::invalid_argument);
}

TEST_CASE("similarity transforms the ladder pair") {
  Matrix s = Matrix::Zero(3, 3);
  s(0, 0) = 1.0;
  s(1, 1) = 2.0;
  s(2, 2) = 4.0;
  const QuonModel m = build_quon(0.5, 2, 2.0, s);
  REQUIRE_FALSE(m.hermitian);
  REQUIRE(std::abs(m.similarity_cond - 4.0) < 1e-14);
  REQUIRE(std::abs(m.x0.matrix()(0, 1) - Complex(0.5)) < 1e-15);
  REQUIRE(std::abs(m.x0.matrix()(1, 2) - Complex(0.61237243569579447)) < 1e-15);
  REQUIRE(std::abs(m.y0.matrix()(1, 0) - Complex(2.0)) < 1e-15);
}

TEST_CASE("qmutator diagonal at q = 0 and q = 1") {
  const QuonModel m0 = build_quon(0.0, 4, 2.0);
  const RealVector d0 = qmutator_defect(m0);
  REQUIRE(d0.size() == 5);
  for (int i = 0; i < 4; ++i) REQUIRE(std::abs(d0(i)) < 1e-15);
  REQUIRE(std::abs(d0(4) + 1.0) < 1e-15);

  const QuonModel m1 = build_quon(1.0, 5, 2.0);
  const RealVector d1 = qmutator_defect(m1);
  for (int i = 0; i < 5; ++i) REQUIRE(std::abs(d1(i)) < 1e-13);
  REQUIRE(std::abs(d1(5) + 6.0) < 1e-13);

  // conjugation leaves the defect diagonal unchanged
  Matrix s = Matrix::Identity(6, 6);
  for (int i = 0; i < 6; ++i) s(i, i) = 1.0 + 0.25 * i;
  const QuonModel mp = build_quon(1.0, 5, 2.0, s);
  const RealVector dp = qmutator_defect(mp);
  REQUIRE((dp - d1).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("vacuum form annihilates x0") {
  const QuonModel m = build_quon(0.5, 4, 2.0);
  const TraceForm phi0 = vacuum_form(m);
  REQUIRE((phi0.weight() - 5.0 * detail::matrix_unit(5, 0, 0)).cwiseAbs().maxCoeff() <
          1e-14);
  REQUIRE((m.x0.matrix() * phi0.weight()).cwiseAbs().maxCoeff() < 1e-15);
  REQUIRE(std::abs(tau(phi0.weight()) - Complex(1.0)) < 1e-15);
}

TEST_CASE("ladder masses follow the beta factorials") {
  const QuonModel m = build_quon(0.5, 5, 2.0);
  REQUIRE(m.valid_depth == 3);
  REQUIRE(std::abs(tau(ladder_form(m, 0).weight()) - Complex(1.0)) < 1e-14);
  REQUIRE(std::abs(tau(ladder_form(m, 2).weight()) - Complex(1.5)) < 1e-14);
  REQUIRE(std::abs(tau(ladder_form(m, 3).weight()) - Complex(2.625)) < 1e-13);
}

TEST_CASE("a diagonal similarity rescales the ladder masses") {
  Matrix s = Matrix::Zero(3, 3);
  s(0, 0) = 1.0;
  s(1, 1) = 2.0;
  s(2, 2) = 4.0;
  const QuonModel m = build_quon(0.5, 2, 2.0, s);
  // y0 e_0 = 2 e_1, so the depth-1 weight has mass 4 instead of beta_1! = 1
  const QuonModel mh = build_quon(0.5, 3, 2.0);
  REQUIRE(std::abs(tau(ladder_form(mh, 1).weight()) - Complex(1.0)) < 1e-14);
  Matrix s4 = Matrix::Identity(4, 4);
  s4(1, 1) = 2.0;
  const QuonModel mp = build_quon(0.5, 3, 2.0, s4);
  REQUIRE(std::abs(tau(ladder_form(mp, 1).weight()) - Complex(4.0)) < 1e-13);
}

TEST_CASE("depth bounds") {
  const QuonModel m = build_quon(0.5, 4, 2.0);
  REQUIRE_THROWS_AS(ladder_form(m, -1), std::invalid_argument);
  REQUIRE_THROWS_AS(ladder_form(m, 3), std::out_of_range);
  REQUIRE_THROWS_AS(number_eigen_defect(m, 3), std::out_of_range);
  REQUIRE_THROWS_AS(lowering_defect(m, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(lowering_defect(m, 3), std::out_of_range);
  REQUIRE_THROWS_AS(eta_ladder(m, 3), std::out_of_range);
}

TEST_CASE("number and lowering identities hold to rounding") {
  for (double q : {-0.5, 0.0, 0.5, 1.0}) {
    const QuonModel m = build_quon(q, 6, 2.0);
    for (int l = 0; l <= m.valid_depth; ++l) {
      REQUIRE(number_eigen_defect(m, l) < 1e-12);
      if (l >= 1) REQUIRE(lowering_defect(m, l) < 1e-12);
    }
  }
  Matrix s = Matrix::Identity(7, 7);
  for (int i = 0; i < 7; ++i) s(i, i) = 1.0 + 0.2 * i;
  const QuonModel mp = build_quon(0.5, 6, 2.0, s);
  for (int l = 0; l <= mp.valid_depth; ++l) {
    REQUIRE(number_eigen_defect(mp, l) < 1e-12);
    if (l >= 1) REQUIRE(lowering_defect(mp, l) < 1e-12);
  }
}

TEST_CASE("number defect reduction matches the literal unit loop") {
  const QuonModel m = build_quon(0.5, 3, 2.0);
  const int d = m.ctx.dim;
  const int l = 1;
  const TraceForm phil = ladder_form(m, l);
  const double bl = beta(m.q, l);
  const Element nmb(m.y0.matrix() * m.x0.matrix() - bl * Matrix::Identity(d, d), m.ctx);
  double lit = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      lit = std::max(lit,
                     std::abs(phil(Element(detail::matrix_unit(d, i, j), m.ctx), nmb)));
  lit /= std::max(1.0, tau(phil.weight()).real());
  REQUIRE(std::abs(lit - number_eigen_defect(m, l)) < 1e-15);
}

TEST_CASE("eta ladder mirrors the phi ladder") {
  Matrix s = Matrix::Identity(6, 6);
  for (int i = 0; i < 6; ++i) s(i, i) = 1.0 + 0.3 * i;
  for (const QuonModel& m : {build_quon(0.5, 5, 2.0), build_quon(0.5, 5, 2.0, s)}) {
    for (int l = 0; l <= m.valid_depth; ++l) {
      const EtaLadder eta = eta_ladder(m, l);
      REQUIRE(eta.number_defect < 1e-12);
      if (l >= 1) REQUIRE(eta.lowering_defect < 1e-12);
      if (m.hermitian) {
        const Matrix diff = eta.form.weight() - ladder_form(m, l).weight();
        REQUIRE(diff.cwiseAbs().maxCoeff() < 1e-12);
      }
    }
  }
}

TEST_CASE("fermion point collapses the ladder at depth two") {
  const QuonModel m = build_quon(-1.0, 4, 2.0);
  REQUIRE(std::abs(beta(-1.0, 2)) == 0.0);
  REQUIRE(ladder_form(m, 2).weight().cwiseAbs().maxCoeff() < 1e-15);
  REQUIRE(ladder_form(m, 1).weight().cwiseAbs().maxCoeff() > 0.5);
  const TraceForm phi0 = vacuum_form(m);
  REQUIRE((m.x0.matrix() * phi0.weight()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("operator norm report") {
  const QuonModel mf = build_quon(-1.0, 6, 2.0);
  const QuonNormReport rf = quon_norm_report(mf);
  REQUIRE(rf.op_norm == 1.0);
  REQUIRE(rf.within_bound);
  REQUIRE(rf.bound_sq == 1.0);

  const QuonModel mh = build_quon(0.5, 6, 2.0);
  const QuonNormReport rh = quon_norm_report(mh);
  REQUIRE(rh.bound_sq == 4.0);
  REQUIRE(rh.op_norm_sq < 2.0);
  REQUIRE(rh.within_bound);

  const QuonModel m1 = build_quon(1.0, 5, 2.0);
  const QuonNormReport r1 = quon_norm_report(m1);
  REQUIRE(std::isinf(r1.bound_sq));
  REQUIRE(std::abs(r1.op_norm_sq - 5.0) < 20.0 * kEps);
  REQUIRE(r1.within_bound);
}
