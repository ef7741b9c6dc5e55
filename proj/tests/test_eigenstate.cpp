#include <catch2/catch_amalgamated.hpp>

#include "sesqui/eigenstate.hpp"

using namespace sesqui;

namespace {

const AlgebraContext ctx2 = make_context(2, 2.0);
const AlgebraContext ctx3 = make_context(3, 2.0);

Matrix diagm(std::initializer_list<double> entries) {
  const int d = static_cast<int>(entries.size());
  Matrix m = Matrix::Zero(d, d);
  int i = 0;
  for (double v : entries) m(i, i) = v, ++i;
  return m;
}

}  // namespace

TEST_CASE("residual and eigenvalue extraction on a diagonal pair") {
  const TraceForm f(diagm({2.0, 0.0}), FormFlavor::right, ctx2);
  const Element a(diagm({2.0, 3.0}), ctx2);
  REQUIRE(std::abs(eigen_residual(f, a, Complex(2.0))) < 1e-15);
  REQUIRE(std::abs(eigen_residual(f, a, Complex(3.0)) - 1.0) < 1e-15);
  REQUIRE(std::abs(eigenvalue_extract(f, a) - Complex(2.0)) < 1e-15);
}

TEST_CASE("full eigenstate report on a planted diagonal case") {
  const TraceForm f(diagm({2.0, 0.0}), FormFlavor::right, ctx2);
  const Element a(diagm({2.0, 3.0}), ctx2);
  const EigenReport rep = is_eigenstate(f, a, 1e-10);
  REQUIRE(rep.eigenstate);
  REQUIRE(std::abs(rep.lambda - Complex(2.0)) < 1e-14);
  REQUIRE(rep.residual < 1e-14);
  REQUIRE(rep.factorization_defect < 1e-14);
  for (double d : rep.dual_defects) REQUIRE(d < 1e-14);
  REQUIRE(rep.modulus_defect < 1e-14);
  REQUIRE(rep.hermitian_input);
  REQUIRE(rep.reality_defect < 1e-15);
}

TEST_CASE("a generic pair is rejected with a fat margin") {
  const TraceForm f(Matrix::Identity(2, 2), FormFlavor::right, ctx2);
  const Element a(diagm({2.0, 3.0}), ctx2);
  const EigenReport rep = is_eigenstate(f, a, 1e-10);
  REQUIRE_FALSE(rep.eigenstate);
  REQUIRE(rep.residual > 1e-2);
  REQUIRE(rep.factorization_defect > 1e-2);
}

TEST_CASE("left-flavor forms are rejected") {
  const TraceForm f(diagm({2.0, 0.0}), FormFlavor::left, ctx2);
  const Element a(diagm({2.0, 3.0}), ctx2);
  REQUIRE_THROWS_AS(is_eigenstate(f, a, 1e-10), std::invalid_argument);
}

TEST_CASE("zero mass is a domain error") {
  const TraceForm f(Matrix::Zero(2, 2), FormFlavor::right, ctx2);
  const Element a(diagm({2.0, 3.0}), ctx2);
  REQUIRE_THROWS_AS(is_eigenstate(f, a, 1e-10), std::domain_error);
}

TEST_CASE("construction from a non-normal matrix") {
  Matrix n(2, 2);
  n << 2.0, 1.0, 0.0, 3.0;
  const Element a(n, ctx2);
  const TraceForm f = eigenstate_construct(a, Complex(2.0));
  // ker(a - 2e) is spanned by e_0, so the weight is 2 E_00
  REQUIRE((f.weight() - diagm({2.0, 0.0})).cwiseAbs().maxCoeff() < 1e-14);
  const EigenReport rep = is_eigenstate(f, a, 1e-10);
  REQUIRE(rep.eigenstate);
  REQUIRE(std::abs(rep.lambda - Complex(2.0)) < 1e-14);
  REQUIRE_FALSE(rep.hermitian_input);
}

TEST_CASE("projections give eigenstates at a complex scalar") {
  const Complex alpha(0.7, 0.2);
  Matrix p = diagm({1.0, 1.0, 0.0});
  const Element a(alpha * p, ctx3);
  const TraceForm f = eigenstate_construct(a, alpha);
  REQUIRE((f.weight() - diagm({1.5, 1.5, 0.0})).cwiseAbs().maxCoeff() < 1e-14);
  const EigenReport rep = is_eigenstate(f, a, 1e-10);
  REQUIRE(rep.eigenstate);
  REQUIRE(std::abs(rep.lambda - alpha) < 1e-14);
  REQUIRE(rep.modulus_defect < 1e-14);
  for (double d : rep.dual_defects) REQUIRE(d < 1e-14);
}

TEST_CASE("construction outside the spectrum is a domain error") {
  const Element a(diagm({2.0, 3.0}), ctx2);
  REQUIRE_THROWS_AS(eigenstate_construct(a, Complex(5.0)), std::domain_error);
}

TEST_CASE("eigenstates at distinct spectrum points are independent") {
  const Element a(diagm({1.0, 2.0, 3.0}), ctx3);
  std::vector<TraceForm> forms;
  for (double lam : {1.0, 2.0, 3.0}) forms.push_back(eigenstate_construct(a, lam));
  REQUIRE(independence_rank(forms) == 3);
  forms.push_back(forms.front());
  REQUIRE(independence_rank(forms) == 3);
  REQUIRE(independence_rank({forms[0]}) == 1);
}

TEST_CASE("convex mixtures within one eigenvalue stay eigenstates") {
  const Element a(diagm({2.0, 2.0, 5.0}), ctx3);
  const TraceForm f1(diagm({3.0, 0.0, 0.0}), FormFlavor::right, ctx3);
  const TraceForm f2(diagm({0.0, 3.0, 0.0}), FormFlavor::right, ctx3);
  const TraceForm mix = convex_combine({0.3, 0.7}, {f1, f2});
  const EigenReport rep = is_eigenstate(mix, a, 1e-10);
  REQUIRE(rep.eigenstate);
  REQUIRE(std::abs(rep.lambda - Complex(2.0)) < 1e-14);

  // mixing across eigenvalues destroys the property
  const TraceForm f3(diagm({0.0, 0.0, 3.0}), FormFlavor::right, ctx3);
  const TraceForm cross = convex_combine({0.5, 0.5}, {f1, f3});
  const EigenReport bad = is_eigenstate(cross, a, 1e-10);
  REQUIRE_FALSE(bad.eigenstate);
  REQUIRE(std::abs(bad.lambda - Complex(3.5)) < 1e-14);
  REQUIRE(std::abs(bad.residual - 2.25) < 1e-13);
}

TEST_CASE("polynomial extension of the eigen identity") {
  const TraceForm f(diagm({2.0, 0.0}), FormFlavor::right, ctx2);
  const Element a(diagm({2.0, 3.0}), ctx2);

  const PolyEigenReport sq = polynomial_eigen_check(f, a, {0.0, 0.0, 1.0}, 1e-10);
  REQUIRE(sq.pass);
  REQUIRE(std::abs(sq.lambda - Complex(2.0)) < 1e-14);
  REQUIRE(std::abs(sq.p_lambda - Complex(4.0)) < 1e-13);

  const PolyEigenReport cu = polynomial_eigen_check(f, a, {1.0, 1.0, 0.0, 1.0}, 1e-10);
  REQUIRE(cu.pass);
  REQUIRE(std::abs(cu.p_lambda - Complex(11.0)) < 1e-12);

  const TraceForm plain(Matrix::Identity(2, 2), FormFlavor::right, ctx2);
  const PolyEigenReport bad = polynomial_eigen_check(plain, a, {0.0, 1.0}, 1e-10);
  REQUIRE_FALSE(bad.pass);
  REQUIRE(bad.defect > 0.1);
}
