#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sesqui/algebra.hpp"
#include "sesqui/coherent.hpp"
#include "sesqui/eigenstate.hpp"
#include "sesqui/gns.hpp"
#include "sesqui/quon.hpp"
#include "sesqui/trace_form.hpp"

// Check harness: runs the whole battery over a (q, N, p) grid for the
// hermitian and pseudo model variants, writes one JSON report per grid
// point plus a summary, and a flat TSV table for sweeps. Reports are
// deterministic for a fixed config: seeded generators, fixed iteration
// order, no timestamps.

namespace sesqui::harness {

inline constexpr const char* kSchemaVersion = "sesqui-report/1";
inline constexpr const char* kSweepSchemaVersion = "sesqui-sweep/1";

class config_error : public std::invalid_argument {
 public:
  explicit config_error(const std::string& what) : std::invalid_argument(what) {}
};

enum class SimilarityKind { none, diagonal, random_invertible, both };

struct SimilaritySpec {
  SimilarityKind kind = SimilarityKind::diagonal;
  std::vector<double> entries;  // diagonal entries; empty selects the ramp 1..2
};

struct CoherentConfig {
  double eps = 1e-8;
  double z_factor = 0.3;  // probe at z = z_factor * rho
  double z_at_q1 = 2.0;   // rho is infinite at q = 1; fixed probe instead
};

struct RunConfig {
  std::vector<double> q_grid{-1.0, -0.5, 0.0, 0.5, 0.9, 1.0};
  std::vector<int> n_grid{4, 8, 12};
  std::vector<double> p_grid{2.0, 4.0};
  SimilaritySpec similarity;
  std::uint64_t seed = 7251931;
  std::string output_dir = "reports";
  CoherentConfig coherent;
  double gns_rank_tol = -1.0;  // quotient rank cutoff; negative picks the builder default
  std::map<std::string, double> tolerance_overrides;
};

inline void validate_config(const RunConfig& cfg) {
  if (cfg.q_grid.empty() || cfg.n_grid.empty() || cfg.p_grid.empty())
    throw config_error("config: q, levels and p grids must be nonempty");
  for (double q : cfg.q_grid)
    if (std::isnan(q) || q < -1.0 || q > 1.0)
      throw config_error("config: q values must lie in [-1, 1]");
  for (int n : cfg.n_grid)
    if (n < 2) throw config_error("config: levels must be >= 2");
  for (double p : cfg.p_grid)
    if (std::isnan(p) || p < 2.0) throw config_error("config: p values must be >= 2");
  if (!(cfg.coherent.eps > 0.0) || std::isinf(cfg.coherent.eps))
    throw config_error("config: coherent eps must be positive and finite");
  if (cfg.coherent.z_factor < 0.0 || cfg.coherent.z_factor > kCoherentGuard)
    throw config_error("config: coherent z_factor must lie in [0, 0.95]");
  if (cfg.coherent.z_at_q1 < 0.0) throw config_error("config: z_at_q1 must be >= 0");
  if (cfg.gns_rank_tol >= 0.0 && !(cfg.gns_rank_tol < 1.0))
    throw config_error("config: rank_tol must be below 1");
  if (std::isnan(cfg.gns_rank_tol)) throw config_error("config: rank_tol must be a number");
  for (const auto& [id, bound] : cfg.tolerance_overrides)
    if (std::isnan(bound) || bound < 0.0)
      throw config_error("config: tolerance override for " + id + " must be >= 0");
  if (cfg.output_dir.empty()) throw config_error("config: output_dir must be nonempty");
}

inline SimilarityKind similarity_kind_from(const std::string& s) {
  if (s == "none") return SimilarityKind::none;
  if (s == "diagonal") return SimilarityKind::diagonal;
  if (s == "random") return SimilarityKind::random_invertible;
  if (s == "both") return SimilarityKind::both;
  throw config_error("config: unknown similarity kind '" + s + "'");
}

inline const char* similarity_kind_name(SimilarityKind k) {
  switch (k) {
    case SimilarityKind::none: return "none";
    case SimilarityKind::diagonal: return "diagonal";
    case SimilarityKind::random_invertible: return "random";
    case SimilarityKind::both: return "both";
  }
  return "?";
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  try {
    if (j.contains("q")) cfg.q_grid = j.at("q").get<std::vector<double>>();
    if (j.contains("levels")) cfg.n_grid = j.at("levels").get<std::vector<int>>();
    if (j.contains("p")) cfg.p_grid = j.at("p").get<std::vector<double>>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out")) cfg.output_dir = j.at("out").get<std::string>();
    if (j.contains("similarity")) {
      const auto& s = j.at("similarity");
      if (s.contains("kind"))
        cfg.similarity.kind = similarity_kind_from(s.at("kind").get<std::string>());
      if (s.contains("entries"))
        cfg.similarity.entries = s.at("entries").get<std::vector<double>>();
    }
    if (j.contains("coherent")) {
      const auto& c = j.at("coherent");
      if (c.contains("eps")) cfg.coherent.eps = c.at("eps").get<double>();
      if (c.contains("z_factor")) cfg.coherent.z_factor = c.at("z_factor").get<double>();
      if (c.contains("z_at_q1")) cfg.coherent.z_at_q1 = c.at("z_at_q1").get<double>();
    }
    if (j.contains("rank_tol")) cfg.gns_rank_tol = j.at("rank_tol").get<double>();
    if (j.contains("tolerances"))
      cfg.tolerance_overrides = j.at("tolerances").get<std::map<std::string, double>>();
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("config: malformed value (") + e.what() + ")");
  }
  validate_config(cfg);
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("config: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("config: parse failure in ") + path + ": " + e.what());
  }
  return config_from_json(j);
}

struct Check {
  std::string id;
  std::string identity;  // the identity or bound being checked, as a formula
  double value = 0.0;
  double bound = 0.0;
  std::string status;  // pass | fail | skip
};

struct PointReport {
  double q = 0.0;
  int levels = 0;
  double p = 2.0;
  std::string model;  // hermitian | diagonal | random
  std::vector<Check> checks;
  std::set<std::string> consumed_overrides;
  nlohmann::ordered_json detail;
  std::string error;  // nonempty when the point aborted
};

struct SuiteResult {
  int exit_code = 0;
  int total_checks = 0;
  int failures = 0;
  std::vector<std::string> written_files;
  std::string first_failure;
  std::vector<std::string> unused_overrides;  // tolerance ids that matched no executed check
};

// --- formatting --------------------------------------------------------

namespace detail {

inline std::string fmt17(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmtg(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline nlohmann::ordered_json jnum(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

inline nlohmann::ordered_json jvec(const std::vector<double>& v) {
  nlohmann::ordered_json a = nlohmann::ordered_json::array();
  for (double x : v) a.push_back(jnum(x));
  return a;
}

inline nlohmann::ordered_json jcomplex(Complex z) {
  return nlohmann::ordered_json::array({jnum(z.real()), jnum(z.imag())});
}

}  // namespace detail

inline nlohmann::ordered_json formula_notes() {
  nlohmann::ordered_json notes = nlohmann::ordered_json::array();
  auto add = [&](const char* id, const char* note) {
    notes.push_back({{"id", id}, {"note", note}});
  };
  add("beta-closed-form",
      "beta_0 = 0, beta_l = 1 + q beta_{l-1} has closed form (1 - q^l)/(1 - q) for q != 1; "
      "the variant with exponent l+1 contradicts beta_1 = 1 and is not used");
  add("number-identity-arguments",
      "the number identity is checked with a single quantified slot: "
      "phi_l(b, n0) = beta_l phi_l(b, e) for all b, with n0 = y0 x0");
  add("eta-recursion",
      "eta_l chains through eta_{l-1} (weights V_l = x0* V_{l-1} x0); chaining through "
      "phi_{l-1} would break the eta number identity");
  add("radius-limit",
      "rho' = lim beta_{l+1}^2 = 1/(1-q)^2 for |q| < 1; the first-power value 1/(1-q) "
      "is reported as rho_prime_linear_variant and does not match the defining limit");
  return notes;
}

// --- check sink --------------------------------------------------------

namespace detail {

struct CheckSink {
  std::vector<Check>* out;
  const std::map<std::string, double>* overrides;
  std::set<std::string>* consumed = nullptr;

  void add(const std::string& id, const std::string& identity, double value,
           double default_bound) {
    double bound = default_bound;
    if (overrides) {
      auto it = overrides->find(id);
      if (it != overrides->end()) {
        bound = it->second;
        if (consumed) consumed->insert(id);
      }
    }
    out->push_back(Check{id, identity, value, bound, value <= bound ? "pass" : "fail"});
  }

  void skip(const std::string& id, const std::string& identity) {
    out->push_back(Check{id, identity, 0.0, 0.0, "skip"});
  }
};

inline Element random_element(const AlgebraContext& ctx, std::mt19937_64& rng) {
  return Element(sesqui::detail::random_ginibre(ctx.dim, rng) / std::sqrt(2.0 * ctx.dim), ctx);
}

inline Matrix random_unitary(int d, std::mt19937_64& rng) {
  const Matrix g = sesqui::detail::random_ginibre(d, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix qmat = qr.householderQ() * Matrix::Identity(d, d);
  return qmat;
}

inline TraceForm random_psd_form(const AlgebraContext& ctx, std::mt19937_64& rng) {
  const Matrix b = sesqui::detail::random_ginibre(ctx.dim, rng);
  Matrix w = b * b.adjoint() / static_cast<double>(ctx.dim);
  return TraceForm(w, FormFlavor::right, ctx, /*normalize=*/true);
}

// --- sections ----------------------------------------------------------

inline void section_algebra(const AlgebraContext& ctx, std::mt19937_64& rng, CheckSink& sink) {
  const Element e = identity_element(ctx);
  double unit_dev = 0.0;
  for (double r : {ctx.p, 2.0, kInfinity})
    unit_dev = std::max(unit_dev, std::abs(schatten_norm(e, r) - 1.0));
  sink.add("alg.unit-norm", "|e|_r = 1 for every r", unit_dev, 1e-14);

  double invol = 0.0, product = 0.0, assoc = 0.0;
  for (int t = 0; t < 8; ++t) {
    const Element a = random_element(ctx, rng);
    const Element b = random_element(ctx, rng);
    const Element c = random_element(ctx, rng);
    for (double r : {ctx.p, kInfinity}) {
      const double na = schatten_norm(a, r);
      invol = std::max(invol,
                       std::abs(schatten_norm(adjoint(a), r) - na) / std::max(1.0, na));
    }
    const double ab_p = ambient_norm(a * b);
    product = std::max(product, ab_p - ambient_norm(a) * operator_norm(b));
    product = std::max(product, ab_p - operator_norm(a) * ambient_norm(b));
    const Matrix lhs = (a.matrix() * b.matrix()) * c.matrix();
    const Matrix rhs = a.matrix() * (b.matrix() * c.matrix());
    assoc = std::max(assoc, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  sink.add("alg.involution-isometry", "|a*|_r = |a|_r", invol, 1e-12);
  sink.add("alg.product-bound", "|a b|_p <= |a|_p |b|_0 and |a|_0 |b|_p", product, 1e-12);
  sink.add("alg.associativity", "(a b) c = a (b c)", assoc, 1e-13);
}

inline void section_forms(const AlgebraContext& ctx, std::mt19937_64& rng, CheckSink& sink) {
  const Element e = identity_element(ctx);
  const TraceForm f_id(Matrix::Identity(ctx.dim, ctx.dim), FormFlavor::right, ctx);
  const TraceForm f_rand = random_psd_form(ctx, rng);
  const TraceForm f_left = dual(f_rand);

  sink.add("form.normalization", "phi(e,e) = 1 after normalization",
           std::abs(f_rand(e, e) - Complex(1.0)), 1e-13);

  double herm = 0.0, cs = 0.0, cont = 0.0, module = 0.0, pull = 0.0, dual_eval = 0.0,
         convex_eval = 0.0;
  double min_pos = 0.0;
  const double gamma_rand = continuity_constant(f_rand);
  for (int t = 0; t < 8; ++t) {
    const Element a = random_element(ctx, rng);
    const Element b = random_element(ctx, rng);
    const Element c = random_element(ctx, rng);
    herm = std::max(herm, std::abs(f_rand(a, b) - std::conj(f_rand(b, a))));
    min_pos = std::min(min_pos, f_rand(a, a).real());
    min_pos = std::min(min_pos, f_id(a, a).real());
    const double paa = f_rand(a, a).real(), pbb = f_rand(b, b).real();
    cs = std::max(cs, (std::norm(f_rand(a, b)) - paa * pbb) / std::max(1.0, paa * pbb));
    const double holder = gamma_rand * ambient_norm(a) * ambient_norm(b);
    cont = std::max(cont, (std::abs(f_rand(a, b)) - holder) / std::max(1.0, holder));
    module = std::max(module, std::abs(f_rand(c * a, b) - f_rand(a, adjoint(c) * b)));
    module = std::max(module, std::abs(f_left(a * c, b) - f_left(a, b * adjoint(c))));
    const TraceForm pb = pullback(f_rand, c);
    pull = std::max(pull, std::abs(pb(a, b) - f_rand(a * c, b * c)));
    const TraceForm pbl = pullback(f_left, c);
    pull = std::max(pull, std::abs(pbl(a, b) - f_left(c * a, c * b)));
    dual_eval = std::max(dual_eval, std::abs(f_left(a, b) - f_rand(adjoint(b), adjoint(a))));
    const TraceForm mix = convex_combine({0.25, 0.75}, {f_id, f_rand});
    convex_eval = std::max(convex_eval,
                           std::abs(mix(a, b) - (0.25 * f_id(a, b) + 0.75 * f_rand(a, b))));
  }
  sink.add("form.hermitian-symmetry", "phi(a,b) = conj phi(b,a)", herm, 1e-12);
  sink.add("form.positivity", "phi(a,a) >= 0", std::max(0.0, -min_pos), 1e-12);
  sink.add("form.cauchy-schwarz", "|phi(a,b)|^2 <= phi(a,a) phi(b,b)", std::max(0.0, cs),
           1e-10);
  sink.add("form.continuity", "|phi(a,b)| <= gamma |a|_p |b|_p", std::max(0.0, cont), 1e-10);
  sink.add("form.module-action", "phi(c a, b) = phi(a, c* b)", module, 1e-12);
  sink.add("form.pullback", "pullback agrees with direct evaluation", pull, 1e-12);
  sink.add("form.dual-evaluation", "dual(phi)(a,b) = phi(b*, a*)", dual_eval, 1e-13);
  sink.add("form.dual-involution", "dual(dual(phi)) = phi",
           (dual(f_left).weight() - f_rand.weight()).cwiseAbs().maxCoeff(), 1e-15);
  sink.add("form.convex-evaluation", "convex combinations evaluate affinely", convex_eval,
           1e-13);

  sink.add("form.gamma-identity-weight", "gamma = 1 for the unit weight",
           std::abs(continuity_constant(f_id) - 1.0), 1e-12);
  const FormNorm fn_id = form_norm(f_id);
  sink.add("form.sc0-norm", "sup_{|a|_p=1} phi(a,a) = 1 for gamma = 1",
           std::abs(fn_id.value - 1.0), 1e-9);
  const FormNorm fn = form_norm(f_rand);
  sink.add("form.norm-upper", "sup_{|a|_p=1} phi(a,a) <= gamma",
           std::max(0.0, fn.value - gamma_rand) / gamma_rand, 1e-9);
  sink.add("form.norm-attainment", "the form norm attains gamma",
           std::max(0.0, gamma_rand - fn.value) / gamma_rand, 1e-3);
}

inline void section_eigen(const AlgebraContext& ctx, std::mt19937_64& rng, CheckSink& sink) {
  const int d = ctx.dim;
  double construct_res = 0.0, lambda_rec = 0.0, dual_worst = 0.0, dual_spread = 0.0,
         modulus = 0.0, reality = 0.0;
  int verdict_mismatch = 0;

  for (int t = 0; t < 4; ++t) {
    // planted: a random matrix, one of its eigenvalues, the kernel form
    const Matrix g = sesqui::detail::random_ginibre(d, rng);
    Eigen::ComplexEigenSolver<Matrix> es(g);
    const Complex lam = es.eigenvalues()(t % d);
    const Element a(g, ctx);
    const TraceForm f = eigenstate_construct(a, lam);
    const EigenReport rep = is_eigenstate(f, a, 1e-10);
    construct_res = std::max(construct_res, rep.residual);
    lambda_rec = std::max(lambda_rec, std::abs(rep.lambda - lam) / std::max(1.0, std::abs(lam)));
    for (double dd : rep.dual_defects) dual_worst = std::max(dual_worst, dd);
    for (double d1 : rep.dual_defects)
      for (double d2 : rep.dual_defects) dual_spread = std::max(dual_spread, std::abs(d1 - d2));
    modulus = std::max(modulus, rep.modulus_defect);
    if (!rep.eigenstate || rep.factorization_defect > 1e-8) ++verdict_mismatch;

    // hermitian planted: real eigenvalue
    Matrix h = g + g.adjoint();
    Eigen::SelfAdjointEigenSolver<Matrix> hes(h);
    const double hlam = hes.eigenvalues()(t % d);
    const Element ha(h, ctx);
    const TraceForm hf = eigenstate_construct(ha, hlam);
    const EigenReport hrep = is_eigenstate(hf, ha, 1e-10);
    reality = std::max(reality, hrep.reality_defect);
    construct_res = std::max(construct_res, hrep.residual);

    // negative: a generic pair must be rejected by both characterizations
    const TraceForm fneg = random_psd_form(ctx, rng);
    const Element aneg = random_element(ctx, rng);
    const EigenReport nrep = is_eigenstate(fneg, aneg, 1e-10);
    if (nrep.eigenstate || nrep.factorization_defect <= 1e-8) ++verdict_mismatch;
  }
  sink.add("eig.construct-residual", "phi(a - lambda e, a - lambda e) = 0", construct_res,
           1e-10);
  sink.add("eig.lambda-recovery", "lambda = phi(e,a)/phi(e,e)", lambda_rec, 1e-8);
  sink.add("eig.verdict-agreement", "residual and sup-defect verdicts agree",
           static_cast<double>(verdict_mismatch), 0.5);
  sink.add("eig.dual-agreement", "the four eigenstate statements hold together", dual_worst,
           1e-8);
  sink.add("eig.dual-spread", "the four defects coincide", dual_spread, 1e-10);
  sink.add("eig.modulus", "phi(a,a) = |lambda|^2 phi(e,e)", modulus, 1e-10);
  sink.add("eig.reality", "hermitian eigenstates have real lambda", reality, 1e-10);

  {  // multiplicity two: convex mixtures of kernel eigenstates stay eigenstates
    const Matrix u = random_unitary(d, rng);
    RealVector spec(d);
    for (int i = 0; i < d; ++i) spec(i) = 0.25 * i;
    spec(1) = spec(0);  // double eigenvalue at 0
    const Matrix h = u * spec.asDiagonal() * u.adjoint();
    const Element ha(h, ctx);
    const Vector v1 = u.col(0), v2 = u.col(1);
    const TraceForm f1(static_cast<double>(d) * (v1 * v1.adjoint()), FormFlavor::right, ctx);
    const TraceForm f2(static_cast<double>(d) * (v2 * v2.adjoint()), FormFlavor::right, ctx);
    const TraceForm mix = convex_combine({0.3, 0.7}, {f1, f2});
    const EigenReport rep = is_eigenstate(mix, ha, 1e-10);
    sink.add("eig.convex-stability", "convex mixtures at a common lambda stay eigenstates",
             rep.residual + std::abs(rep.lambda - Complex(spec(0))), 1e-10);
  }

  {  // independence of eigenstates at distinct spectrum points
    RealVector spec(d);
    for (int i = 0; i < d; ++i) spec(i) = 1.0 + i;
    const Matrix u = random_unitary(d, rng);
    const Element a(u * spec.asDiagonal() * u.adjoint(), ctx);
    std::vector<TraceForm> forms;
    for (int k = 0; k < 3; ++k) forms.push_back(eigenstate_construct(a, spec(k)));
    const int r3 = independence_rank(forms);
    forms.push_back(forms.front());
    const int r3b = independence_rank(forms);
    sink.add("eig.independence", "distinct-eigenvalue eigenstates are independent",
             std::abs(r3 - 3.0) + std::abs(r3b - 3.0), 0.5);
  }

  {  // polynomial extension
    const Matrix u = random_unitary(d, rng);
    RealVector spec(d);
    for (int i = 0; i < d; ++i) spec(i) = -1.0 + 0.5 * i;
    const Element a(u * spec.asDiagonal() * u.adjoint(), ctx);
    const TraceForm f = eigenstate_construct(a, spec(2));
    const std::vector<Complex> coeffs{1.0, 1.0, 0.0, 1.0};  // 1 + t + t^3
    const PolyEigenReport rep = polynomial_eigen_check(f, a, coeffs, 1e-10);
    sink.add("eig.polynomial", "phi(b, p(a)) = p(lambda) phi(b, e)", rep.defect / rep.growth,
             1e-10);
  }
}

inline void section_quon(const QuonModel& m, CheckSink& sink,
                         nlohmann::ordered_json& detail) {
  const int n = m.levels;
  const BetaSequence seq = beta_sequence(m.q, n);

  double bridge = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g2 = m.gamma(i) * m.gamma(i);
    bridge = std::max(bridge, std::abs(g2 - seq.values[static_cast<std::size_t>(i) + 1]) /
                                  std::max(1.0, g2));
  }
  sink.add("quon.beta-bridge", "gamma_n^2 = beta_{n+1}", bridge, 1e-14);

  double closed = 0.0;
  if (m.q != 1.0) {
    for (int l = 0; l <= n; ++l) {
      const double cf = (1.0 - std::pow(m.q, l)) / (1.0 - m.q);
      closed = std::max(closed, std::abs(seq.values[static_cast<std::size_t>(l)] - cf) /
                                    std::max(1.0, std::abs(cf)));
    }
    sink.add("quon.beta-closed-form", "beta_l = (1 - q^l)/(1 - q)", closed, 1e-13);
  } else {
    double dev = 0.0;
    for (int l = 0; l <= n; ++l)
      dev = std::max(dev, std::abs(seq.values[static_cast<std::size_t>(l)] - l));
    sink.add("quon.beta-closed-form", "beta_l = l at q = 1", dev, 1e-13);
  }

  const RealVector mut = qmutator_defect(m);
  double body = 0.0;
  for (int i = 0; i < n; ++i) body = std::max(body, std::abs(mut(i)));
  sink.add("quon.qmutator", "x0 y0 - q y0 x0 = e on levels 0..N-1", body, 1e-12);
  const double gtop = m.gamma(n - 1) * m.gamma(n - 1);
  sink.add("quon.qmutator-boundary", "truncation entry is -(1 + q gamma_{N-1}^2)",
           std::abs(mut(n) + 1.0 + m.q * gtop) / std::max(1.0, 1.0 + std::abs(m.q) * gtop),
           1e-12);

  const TraceForm phi0 = vacuum_form(m);
  {
    const EigenReport rep = is_eigenstate(phi0, m.x0, 1e-12);
    sink.add("quon.vacuum-eigenstate", "phi_0(b, x0) = 0 for all b",
             std::max(rep.residual, std::abs(rep.lambda)), 1e-12);
    sink.add("quon.vacuum-annihilation", "phi_0(b, c x0) = 0 for all b, c",
             sesqui::detail::unit_pair_sup(m.x0.matrix() * phi0.weight()), 1e-12);
  }

  double number = 0.0, lowering = 0.0, mass_dev = 0.0;
  std::vector<double> mass(static_cast<std::size_t>(m.valid_depth) + 1);
  for (int l = 0; l <= m.valid_depth; ++l) {
    number = std::max(number, number_eigen_defect(m, l));
    if (l >= 1) lowering = std::max(lowering, lowering_defect(m, l));
    mass[static_cast<std::size_t>(l)] = tau(ladder_form(m, l).weight()).real();
    if (m.hermitian) {
      const double target = seq.factorials[static_cast<std::size_t>(l)];
      mass_dev = std::max(mass_dev, std::abs(mass[static_cast<std::size_t>(l)] - target) /
                                        std::max(1.0, target));
    }
  }
  sink.add("quon.ladder-number", "phi_l(b, n0) = beta_l phi_l(b, e)", number, 1e-10);
  sink.add("quon.ladder-lowering", "phi_l(a x0, b x0) = beta_l^2 phi_{l-1}(a, b)", lowering,
           1e-10);
  if (m.hermitian)
    sink.add("quon.ladder-norm", "phi_l(e,e) = beta_l!", mass_dev, 1e-12);
  else
    sink.skip("quon.ladder-norm", "phi_l(e,e) = beta_l! (hermitian model only)");

  {
    std::vector<TraceForm> ladder;
    for (int l = 0; l <= m.valid_depth; ++l) ladder.push_back(ladder_form(m, l));
    const int rank = independence_rank(ladder);
    if (m.q == -1.0) {
      const double b2 = seq.values[2];
      const double w2 = ladder[2].weight().cwiseAbs().maxCoeff();
      sink.add("quon.fermion-collapse", "beta_2 = 0 and W_2 = 0 at q = -1",
               std::abs(b2) + w2, 1e-15);
      sink.add("quon.ladder-independence", "the surviving ladder forms span rank 2",
               std::abs(rank - 2.0), 0.5);
    } else {
      sink.skip("quon.fermion-collapse", "beta_2 = 0 and W_2 = 0 at q = -1");
      sink.add("quon.ladder-independence", "phi_0..phi_{N-2} are linearly independent",
               std::abs(rank - (m.valid_depth + 1.0)), 0.5);
    }
  }

  double eta_number = 0.0, eta_lowering = 0.0, eta_collapse = 0.0;
  for (int l = 0; l <= m.valid_depth; ++l) {
    const EtaLadder eta = eta_ladder(m, l);
    eta_number = std::max(eta_number, eta.number_defect);
    if (l >= 1) eta_lowering = std::max(eta_lowering, eta.lowering_defect);
    if (m.hermitian) {
      const Matrix diff = eta.form.weight() - ladder_form(m, l).weight();
      eta_collapse = std::max(
          eta_collapse, diff.cwiseAbs().maxCoeff() /
                            std::max(1.0, ladder_form(m, l).weight().cwiseAbs().maxCoeff()));
    }
  }
  sink.add("quon.eta-number", "eta_l(b, n0*) = beta_l eta_l(b, e)", eta_number, 1e-10);
  sink.add("quon.eta-lowering", "eta_l(a y0*, b y0*) = beta_l^2 eta_{l-1}(a, b)", eta_lowering,
           1e-10);
  if (m.hermitian)
    sink.add("quon.eta-collapse", "eta_l = phi_l for the hermitian model", eta_collapse,
             1e-12);
  else
    sink.skip("quon.eta-collapse", "eta_l = phi_l (hermitian model only)");

  const QuonNormReport nr = quon_norm_report(m);
  if (m.q < 1.0)
    sink.add("quon.norm-bound", "|a_q|_0^2 <= 2/(1-q)",
             std::max(0.0, nr.op_norm_sq - nr.bound_sq), 1e-12);
  else
    sink.add("quon.norm-bound", "|a_q|_0^2 = N at q = 1",
             std::abs(nr.op_norm_sq - n) / n, 1e-12);
  if (m.q == -1.0)
    sink.add("quon.norm-fermion", "|a_q|_0 = 1 at q = -1", std::abs(nr.op_norm - 1.0), 1e-15);
  else
    sink.skip("quon.norm-fermion", "|a_q|_0 = 1 at q = -1");

  detail["beta"] = detail::jvec(seq.values);
  detail["beta_factorial"] = detail::jvec(seq.factorials);
  {
    std::vector<double> g(m.gamma.data(), m.gamma.data() + m.gamma.size());
    detail["gamma"] = detail::jvec(g);
  }
  {
    std::vector<double> md(mut.data(), mut.data() + mut.size());
    detail["qmutator_diagonal"] = detail::jvec(md);
  }
  detail["ladder_mass"] = detail::jvec(mass);
  detail["op_norm"] = detail::jnum(nr.op_norm);
  detail["op_norm_sq_bound"] = detail::jnum(nr.bound_sq);
  detail["model_op_norm"] = detail::jnum(nr.model_op_norm);
  detail["similarity_cond"] = detail::jnum(m.similarity_cond);
}

inline void section_coherent(const QuonModel& m, const CoherentConfig& cc,
                             std::mt19937_64& rng, CheckSink& sink,
                             nlohmann::ordered_json& detail) {
  if (m.q == -1.0) {
    bool rejected = false;
    try {
      (void)coherent_radius(m);
    } catch (const std::domain_error&) {
      rejected = true;
    }
    sink.add("coh.collapse-reject", "coherent forms are rejected at q = -1",
             rejected ? 0.0 : 1.0, 0.5);
    for (const char* id : {"coh.ratio-limit", "coh.z0-reduction", "coh.lowering",
                           "coh.tail-domination"})
      sink.skip(id, "coherent checks need q != -1");
    detail["coherent"] = nullptr;
    return;
  }
  sink.skip("coh.collapse-reject", "coherent rejection applies at q = -1");

  const CoherentRadius rad = coherent_radius(m);
  if (m.q < 1.0)
    sink.add("coh.ratio-limit", "beta_{l+1}^2 -> rho' within 1% by l = 100",
             std::abs(rad.ratio_probe / rad.rho_prime - 1.0), 0.01);
  else
    sink.add("coh.ratio-limit", "beta_l = l at q = 1, rho' infinite",
             std::abs(rad.ratio_probe - 101.0 * 101.0), 1e-9);

  const Complex z = m.q == 1.0 ? Complex(cc.z_at_q1) : Complex(cc.z_factor * rad.rho);

  double z0dev = 0.0;
  const TraceForm phi0 = vacuum_form(m);
  for (int t = 0; t < 4; ++t) {
    const Element a = random_element(m.ctx, rng);
    const Element b = random_element(m.ctx, rng);
    const CoherentValue v0 = evaluate_coherent(m, Complex(0.0), a, b, cc.eps);
    z0dev = std::max(z0dev, std::abs(v0.value - phi0(a, b)));
  }
  sink.add("coh.z0-reduction", "Phi_0(a,b) = phi_0(a,b)", z0dev, 1e-13);

  const CoherentLoweringReport low = coherent_lowering_defect(m, z, cc.eps);
  sink.add("coh.lowering", "Phi_z(a x0, b x0) = z Phi_z(a,b) at matched truncation",
           low.defect, cc.eps);

  double excess = 0.0;
  for (int t = 0; t < 6; ++t) {
    const Element a = random_element(m.ctx, rng);
    const Element b = random_element(m.ctx, rng);
    const CoherentValue v = evaluate_coherent(m, z, a, b, 1e-4);
    // everything the model can sum, against the eps-truncated value
    Complex full = 0.0;
    const BetaSequence seq = beta_sequence(m.q, m.valid_depth);
    Complex zp = 1.0;
    for (int l = 0; l <= m.valid_depth; ++l) {
      if (l > 0) zp *= z;
      const double f = seq.factorials[static_cast<std::size_t>(l)];
      full += zp * ladder_form(m, l)(a, b) / (f * f);
    }
    excess = std::max(excess, std::abs(full - v.value) - v.tail_bound);
  }
  sink.add("coh.tail-domination", "the majorant tail dominates the dropped remainder",
           std::max(0.0, excess), 1e-12);

  const Element e = identity_element(m.ctx);
  const CoherentValue vee = evaluate_coherent(m, z, e, e, cc.eps);
  nlohmann::ordered_json cj;
  cj["z"] = detail::jcomplex(z);
  cj["rho_prime"] = detail::jnum(rad.rho_prime);
  cj["rho_prime_linear_variant"] = detail::jnum(rad.rho_prime_linear_variant);
  cj["rho"] = detail::jnum(rad.rho);
  cj["ratio_probe"] = detail::jnum(rad.ratio_probe);
  cj["value_ee"] = detail::jcomplex(vee.value);
  cj["order"] = vee.order;
  cj["tail_bound"] = detail::jnum(vee.tail_bound);
  cj["truncation_residue"] = detail::jnum(vee.truncation_residue);
  cj["lowering_defect"] = detail::jnum(low.defect);
  detail["coherent"] = std::move(cj);
}

inline void section_gns(const QuonModel& m, std::mt19937_64& rng, CheckSink& sink,
                        nlohmann::ordered_json& detail, double rank_tol) {
  const int d = m.ctx.dim;
  const GnsModel g_vac = build_gns(vacuum_form(m), rank_tol);
  const GnsModel g_id =
      build_gns(TraceForm(Matrix::Identity(d, d), FormFlavor::right, m.ctx), rank_tol);
  Vector v = sesqui::detail::random_ginibre(d, rng).col(0);
  v /= v.norm();
  const GnsModel g_r1 = build_gns(
      TraceForm(static_cast<double>(d) * (v * v.adjoint()), FormFlavor::right, m.ctx),
      rank_tol);

  sink.add("gns.quotient-dim-vacuum", "dim(A/N_phi) = d for the vacuum form",
           std::abs(g_vac.quotient_dim() - static_cast<double>(d)), 0.5);
  sink.add("gns.quotient-dim-identity", "dim(A/N_phi) = d^2 for the unit weight",
           std::abs(g_id.quotient_dim() - static_cast<double>(d) * d), 0.5);
  sink.add("gns.quotient-dim-rank1", "dim(A/N_phi) = d for a rank-1 weight",
           std::abs(g_r1.quotient_dim() - static_cast<double>(d)), 0.5);

  double recon = 0.0;
  for (const GnsModel* g : {&g_vac, &g_id, &g_r1}) {
    const Matrix inner = g->unit_classes().adjoint() * g->unit_classes();
    const double top = g->kept_eigenvalues()(0);
    recon = std::max(recon, (inner - g->gram()).cwiseAbs().maxCoeff() / std::max(1.0, top));
  }
  sink.add("gns.gram-reconstruction", "<h(a), h(b)> = phi(a, b) on the unit basis", recon,
           1e-10);

  double star = 0.0;
  auto star_defect = [&](const GnsModel& g, const Element& a) {
    const Matrix ra = g.rep(a);
    const Matrix ras = g.rep(adjoint(a));
    return (ras - ra.adjoint()).cwiseAbs().maxCoeff() /
           std::max(1.0, ra.cwiseAbs().maxCoeff());
  };
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      star = std::max(star,
                      star_defect(g_vac, Element(sesqui::detail::matrix_unit(d, i, j), m.ctx)));
  for (int t = 0; t < 6; ++t) {
    star = std::max(star, star_defect(g_id, random_element(m.ctx, rng)));
    star = std::max(star, star_defect(g_r1, random_element(m.ctx, rng)));
  }
  sink.add("gns.star", "R(a*) = R(a)*", star, 1e-10);

  double homo = 0.0;
  for (const GnsModel* g : {&g_vac, &g_id, &g_r1}) {
    for (int t = 0; t < 5; ++t) {
      const Element a = random_element(m.ctx, rng);
      const Element b = random_element(m.ctx, rng);
      const Matrix lhs = g->rep(a * b);
      const Matrix rhs = g->rep(a) * g->rep(b);
      homo = std::max(homo, (lhs - rhs).cwiseAbs().maxCoeff() /
                                std::max(1.0, rhs.cwiseAbs().maxCoeff()));
    }
  }
  sink.add("gns.homomorphism", "R(a b) = R(a) R(b)", homo, 1e-10);

  double cyc = 0.0;
  for (const GnsModel* g : {&g_vac, &g_id, &g_r1}) {
    Eigen::JacobiSVD<Matrix> svd(g->unit_classes());
    const RealVector sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > std::max(sv.size(), Eigen::Index(1)) * kEps * sv(0)) ++rank;
    cyc += std::abs(rank - g->quotient_dim());
  }
  sink.add("gns.cyclicity", "the unit classes span the quotient", cyc, 0.5);

  {
    const TransportReport tr = gns_eigen_transport(g_vac, m.x0, 1e-12);
    sink.add("gns.transport-eigen", "x0 is a vacuum eigenstate in form and vector sense",
             std::max(tr.form_residual, tr.rep_residual), 1e-12);
    const TransportReport tn = gns_eigen_transport(g_vac, m.y0, 1e-10);
    const bool agree = tn.form_eigenstate == tn.rep_eigenstate && !tn.form_eigenstate;
    sink.add("gns.transport-agreement", "both residuals reject non-eigenstates together",
             agree ? 0.0 : 1.0, 0.5);
    const double ident =
        std::max(tr.identity_defect / std::max(1.0, tr.form_residual),
                 tn.identity_defect / std::max(1.0, tn.form_residual));
    sink.add("gns.transport-identity", "phi(a - lambda e, a - lambda e) = |R(a) xi - lambda xi|^2",
             ident, 1e-12);
  }

  const LadderVectors lv = xi_vectors(m, m.valid_depth);
  sink.add("gns.ladder-vectors", "phi_l(a,b) = <R(a) xi_l, R(b) xi_l>",
           lv.reconstruction_defect, 1e-10);

  const OverlapReport ov = overlap_matrix(lv, m);
  std::vector<double> xin(lv.xi.size());
  for (std::size_t l = 0; l < lv.xi.size(); ++l)
    xin[l] = ov.overlaps(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(l)).real();
  sink.add("gns.xi-pairing", "<xi_k, xi_l> = phi_0(y0^k, y0^l)", ov.pairing_defect, 1e-10);
  if (m.hermitian) {
    const BetaSequence seq = beta_sequence(m.q, m.valid_depth);
    double norm_dev = 0.0;
    for (std::size_t l = 0; l < xin.size(); ++l)
      norm_dev = std::max(norm_dev, std::abs(xin[l] - seq.factorials[l]) /
                                        std::max(1.0, seq.factorials[l]));
    sink.add("gns.xi-norm", "|xi_l|^2 = beta_l!", norm_dev, 1e-10);
    sink.add("gns.xi-orthogonality", "<xi_k, xi_l> = 0 for k != l",
             ov.max_normalized_offdiag, 1e-10);
  } else {
    sink.skip("gns.xi-norm", "|xi_l|^2 = beta_l! (hermitian model only)");
    sink.skip("gns.xi-orthogonality", "<xi_k, xi_l> = 0 (hermitian model only)");
  }

  nlohmann::ordered_json gj;
  gj["quotient_dims"] = {{"vacuum", g_vac.quotient_dim()},
                         {"identity", g_id.quotient_dim()},
                         {"rank1", g_r1.quotient_dim()}};
  gj["xi_norm_sq"] = detail::jvec(xin);

  if (!m.hermitian) {
    if (m.q == -1.0) {
      bool collapsed = false;
      try {
        (void)biorthogonality_check(m, m.valid_depth);
      } catch (const std::domain_error&) {
        collapsed = true;
      }
      sink.add("gns.biorth-collapse", "the q = -1 pseudo vacuum kernel is degenerate",
               collapsed ? 0.0 : 1.0, 0.5);
      sink.skip("gns.biorthogonality", "<xi_k, nu_l> = 0 (k != l), needs q != -1");
      sink.skip("gns.biorth-diagonal", "<xi_l, nu_l> = beta_l!, needs q != -1");
    } else {
      sink.skip("gns.biorth-collapse", "kernel collapse applies at q = -1");
      const BiorthReport br = biorthogonality_check(m, m.valid_depth);
      sink.add("gns.biorthogonality", "<xi_k, nu_l> = 0 for k != l",
               br.max_normalized_offdiag, 1e-10);
      sink.add("gns.biorth-diagonal", "<xi_l, nu_l> = beta_l!", br.diag_defect, 1e-10);
      std::vector<double> bd(static_cast<std::size_t>(m.valid_depth) + 1);
      for (std::size_t l = 0; l < bd.size(); ++l)
        bd[l] = br.overlaps(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(l)).real();
      gj["biorth_diag"] = detail::jvec(bd);
    }
  } else {
    sink.skip("gns.biorth-collapse", "pseudo model only");
    sink.skip("gns.biorthogonality", "<xi_k, nu_l> = 0 (pseudo model only)");
    sink.skip("gns.biorth-diagonal", "<xi_l, nu_l> = beta_l! (pseudo model only)");
  }

  {  // the rank-one GNS space is the defining representation in disguise
    Matrix k = Matrix::Zero(d, static_cast<Eigen::Index>(d) * d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) k(i, static_cast<Eigen::Index>(i) * d + j) = v(j);
    // intertwiner: h(a) -> a v; unitary because <h(a), h(b)> = <a v, b v>
    Matrix uimap = Matrix::Zero(d, g_r1.quotient_dim());
    {
      // solve U h(E_ij) = E_ij v over the unit basis, least squares
      const Matrix h = g_r1.unit_classes();  // r x d^2
      uimap = k * h.adjoint() * (h * h.adjoint()).inverse();
    }
    double defect = (uimap.adjoint() * uimap - Matrix::Identity(g_r1.quotient_dim(),
                                                                g_r1.quotient_dim()))
                        .cwiseAbs()
                        .maxCoeff();
    for (int t = 0; t < 4; ++t) {
      const Element a = random_element(m.ctx, rng);
      const Matrix lhs = uimap * g_r1.rep(a);
      const Matrix rhs = a.matrix() * uimap;
      defect = std::max(defect, (lhs - rhs).cwiseAbs().maxCoeff() /
                                    std::max(1.0, a.matrix().cwiseAbs().maxCoeff()));
    }
    sink.add("gns.rank1-intertwiner",
             "the rank-1 weight GNS representation is the defining one", defect, 1e-10);
  }

  detail["gns"] = std::move(gj);
}

}  // namespace detail

// --- grid driver -------------------------------------------------------

namespace detail {

struct PointTask {
  double q = 0.0;
  int levels = 0;
  double p = 2.0;
  std::string model;
  std::size_t qi = 0, ni = 0, pi = 0, vi = 0;
};

inline Matrix similarity_matrix(const PointTask& t, const RunConfig& cfg,
                                std::mt19937_64& rng) {
  const int d = t.levels + 1;
  if (t.model == "diagonal") {
    Matrix s = Matrix::Zero(d, d);
    if (!cfg.similarity.entries.empty()) {
      if (static_cast<int>(cfg.similarity.entries.size()) != d)
        throw config_error("config: similarity entries must have length N+1");
      for (int i = 0; i < d; ++i) {
        if (cfg.similarity.entries[static_cast<std::size_t>(i)] == 0.0)
          throw config_error("config: similarity entries must be nonzero");
        s(i, i) = cfg.similarity.entries[static_cast<std::size_t>(i)];
      }
    } else {
      for (int i = 0; i < d; ++i) s(i, i) = 1.0 + static_cast<double>(i) / (d - 1);
    }
    return s;
  }
  // random invertible, kept well conditioned
  return Matrix::Identity(d, d) +
         0.3 * sesqui::detail::random_ginibre(d, rng) / std::sqrt(2.0 * d);
}

inline const std::set<std::string>& known_sections() {
  static const std::set<std::string> s{"alg", "form", "eig", "quon", "coh", "gns"};
  return s;
}

inline PointReport run_point(const PointTask& t, const RunConfig& cfg,
                             const std::set<std::string>& sections) {
  PointReport rep;
  rep.q = t.q;
  rep.levels = t.levels;
  rep.p = t.p;
  rep.model = t.model;
  rep.detail = nlohmann::ordered_json::object();

  std::seed_seq seq{static_cast<std::uint64_t>(cfg.seed), static_cast<std::uint64_t>(t.qi),
                    static_cast<std::uint64_t>(t.ni), static_cast<std::uint64_t>(t.pi),
                    static_cast<std::uint64_t>(t.vi)};
  std::mt19937_64 rng(seq);

  const auto on = [&sections](const char* name) {
    return sections.empty() || sections.count(name) > 0;
  };

  CheckSink sink{&rep.checks, &cfg.tolerance_overrides, &rep.consumed_overrides};
  try {
    std::optional<Matrix> s;
    if (t.model != "hermitian") s = similarity_matrix(t, cfg, rng);
    const QuonModel m = build_quon(t.q, t.levels, t.p, s);

    if (on("alg")) section_algebra(m.ctx, rng, sink);
    if (on("form")) section_forms(m.ctx, rng, sink);
    if (on("eig")) section_eigen(m.ctx, rng, sink);
    if (on("quon")) section_quon(m, sink, rep.detail);
    if (on("coh")) section_coherent(m, cfg.coherent, rng, sink, rep.detail);
    if (on("gns")) section_gns(m, rng, sink, rep.detail, cfg.gns_rank_tol);
  } catch (const config_error&) {
    throw;
  } catch (const std::exception& e) {
    rep.error = e.what();
  }
  return rep;
}

inline std::string point_file_name(const PointTask& t) {
  return "point_q" + fmtg(t.q) + "_N" + std::to_string(t.levels) + "_p" + fmtg(t.p) + "_" +
         t.model + ".json";
}

inline std::vector<PointTask> expand_grid(const RunConfig& cfg) {
  std::vector<std::string> variants{"hermitian"};
  switch (cfg.similarity.kind) {
    case SimilarityKind::none: break;
    case SimilarityKind::diagonal: variants.push_back("diagonal"); break;
    case SimilarityKind::random_invertible: variants.push_back("random"); break;
    case SimilarityKind::both:
      variants.push_back("diagonal");
      variants.push_back("random");
      break;
  }
  std::vector<PointTask> tasks;
  for (std::size_t qi = 0; qi < cfg.q_grid.size(); ++qi)
    for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni)
      for (std::size_t pi = 0; pi < cfg.p_grid.size(); ++pi)
        for (std::size_t vi = 0; vi < variants.size(); ++vi)
          tasks.push_back(PointTask{cfg.q_grid[qi], cfg.n_grid[ni], cfg.p_grid[pi],
                                    variants[vi], qi, ni, pi, vi});
  return tasks;
}

inline std::vector<PointReport> run_grid(const RunConfig& cfg,
                                         const std::vector<PointTask>& tasks,
                                         const std::set<std::string>& sections) {
  std::vector<PointReport> reports(tasks.size());
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(),
                                                     tasks.size()));
  std::size_t next = 0;
  while (next < tasks.size()) {
    const std::size_t batch = std::min(workers, tasks.size() - next);
    std::vector<std::future<PointReport>> futs;
    futs.reserve(batch);
    for (std::size_t k = 0; k < batch; ++k)
      futs.push_back(std::async(std::launch::async, [&tasks, &cfg, &sections, i = next + k] {
        return run_point(tasks[i], cfg, sections);
      }));
    for (std::size_t k = 0; k < batch; ++k) reports[next + k] = futs[k].get();
    next += batch;
  }
  return reports;
}

inline nlohmann::ordered_json config_echo(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["q"] = jvec(cfg.q_grid);
  j["levels"] = cfg.n_grid;
  j["p"] = jvec(cfg.p_grid);
  j["similarity"] = {{"kind", similarity_kind_name(cfg.similarity.kind)},
                     {"entries", jvec(cfg.similarity.entries)}};
  // output_dir deliberately left out: reports must not depend on where they land
  j["seed"] = cfg.seed;
  j["coherent"] = {{"eps", jnum(cfg.coherent.eps)},
                   {"z_factor", jnum(cfg.coherent.z_factor)},
                   {"z_at_q1", jnum(cfg.coherent.z_at_q1)}};
  j["rank_tol"] = jnum(cfg.gns_rank_tol);
  nlohmann::ordered_json tol = nlohmann::ordered_json::object();
  for (const auto& [id, bound] : cfg.tolerance_overrides) tol[id] = jnum(bound);
  j["tolerances"] = std::move(tol);
  return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw numerical_error("cannot write " + path.string());
  out << text;
}

}  // namespace detail

inline SuiteResult run_suite(const RunConfig& cfg, const std::set<std::string>& sections = {}) {
  validate_config(cfg);
  for (const std::string& s : sections)
    if (detail::known_sections().count(s) == 0)
      throw config_error("config: unknown section '" + s + "'");
  const std::vector<detail::PointTask> tasks = detail::expand_grid(cfg);
  const std::vector<PointReport> reports = detail::run_grid(cfg, tasks, sections);

  std::filesystem::create_directories(cfg.output_dir);
  SuiteResult result;
  bool aborted = false;

  nlohmann::ordered_json summary;
  summary["schema_version"] = kSchemaVersion;
  summary["kind"] = "suite";
  summary["config"] = detail::config_echo(cfg);
  if (sections.empty()) {
    summary["sections"] = "all";
  } else {
    nlohmann::ordered_json sj = nlohmann::ordered_json::array();
    for (const std::string& s : sections) sj.push_back(s);
    summary["sections"] = std::move(sj);
  }
  summary["notes"] = formula_notes();
  nlohmann::ordered_json points = nlohmann::ordered_json::array();

  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const PointReport& rep = reports[i];
    const std::string fname = detail::point_file_name(tasks[i]);

    nlohmann::ordered_json pj;
    pj["schema_version"] = kSchemaVersion;
    pj["kind"] = "point";
    pj["q"] = detail::jnum(rep.q);
    pj["levels"] = rep.levels;
    pj["p"] = detail::jnum(rep.p);
    pj["model"] = rep.model;
    nlohmann::ordered_json checks = nlohmann::ordered_json::array();
    int failed_here = 0;
    int skipped_here = 0;
    for (const Check& c : rep.checks) {
      checks.push_back({{"id", c.id},
                        {"identity", c.identity},
                        {"value", detail::jnum(c.value)},
                        {"bound", detail::jnum(c.bound)},
                        {"status", c.status}});
      if (c.status == "skip") ++skipped_here; else ++result.total_checks;
      if (c.status == "fail") {
        ++failed_here;
        ++result.failures;
        if (result.first_failure.empty())
          result.first_failure = fname + ": " + c.id + " (" + c.identity + ")";
      }
    }
    pj["checks"] = std::move(checks);
    pj["detail"] = rep.detail;
    pj["notes"] = formula_notes();
    if (!rep.error.empty()) {
      pj["error"] = rep.error;
      aborted = true;
    }
    detail::write_text(std::filesystem::path(cfg.output_dir) / fname, pj.dump(2) + "\n");
    result.written_files.push_back(fname);

    points.push_back({{"file", fname},
                      {"q", detail::jnum(rep.q)},
                      {"levels", rep.levels},
                      {"p", detail::jnum(rep.p)},
                      {"model", rep.model},
                      {"checks", static_cast<int>(rep.checks.size())},
                      {"skipped", skipped_here},
                      {"failed", failed_here},
                      {"error", rep.error}});
  }
  summary["points"] = std::move(points);
  summary["total_checks"] = result.total_checks;
  summary["failures"] = result.failures;
  summary["first_failure"] = result.first_failure;

  // overrides that never met their check id: typo, or dormant under a
  // section filter / skip. reported, not fatal.
  std::set<std::string> consumed;
  for (const PointReport& rep : reports)
    consumed.insert(rep.consumed_overrides.begin(), rep.consumed_overrides.end());
  nlohmann::ordered_json unused = nlohmann::ordered_json::array();
  for (const auto& [id, bound] : cfg.tolerance_overrides)
    if (consumed.count(id) == 0) {
      unused.push_back(id);
      result.unused_overrides.push_back(id);
    }
  summary["unused_tolerances"] = std::move(unused);

  result.exit_code = aborted ? 3 : (result.failures > 0 ? 2 : 0);
  summary["exit_code"] = result.exit_code;
  detail::write_text(std::filesystem::path(cfg.output_dir) / "summary.json",
                     summary.dump(2) + "\n");
  result.written_files.push_back("summary.json");
  return result;
}

// Flat table over the grid: one row per (q, N, p, model, l).
inline SuiteResult sweep_table(const RunConfig& cfg) {
  validate_config(cfg);
  const std::vector<detail::PointTask> tasks = detail::expand_grid(cfg);

  const std::vector<std::string> columns{
      "q", "levels", "p", "model", "l", "beta", "beta_factorial", "ladder_mass",
      "number_defect", "lowering_defect", "xi_norm_sq", "xi_offdiag_max",
      "biorth_offdiag_max", "coherent_radius", "coherent_lowering_defect", "op_norm",
      "op_norm_sq_bound"};

  std::string tsv = std::string("# ") + kSweepSchemaVersion + "\n";
  for (std::size_t c = 0; c < columns.size(); ++c) {
    tsv += columns[c];
    tsv += c + 1 < columns.size() ? '\t' : '\n';
  }

  SuiteResult result;
  bool aborted = false;
  for (const detail::PointTask& t : tasks) {
    std::seed_seq seq{static_cast<std::uint64_t>(cfg.seed), static_cast<std::uint64_t>(t.qi),
                      static_cast<std::uint64_t>(t.ni), static_cast<std::uint64_t>(t.pi),
                      static_cast<std::uint64_t>(t.vi)};
    std::mt19937_64 rng(seq);
    try {
      std::optional<Matrix> s;
      if (t.model != "hermitian") s = detail::similarity_matrix(t, cfg, rng);
      const QuonModel m = build_quon(t.q, t.levels, t.p, s);
      const BetaSequence bs = beta_sequence(m.q, m.valid_depth);
      const QuonNormReport nr = quon_norm_report(m);

      std::string radius_s = "-", clower_s = "-";
      if (m.q != -1.0) {
        const CoherentRadius rad = coherent_radius(m);
        radius_s = detail::fmt17(rad.rho);
        const Complex z =
            m.q == 1.0 ? Complex(cfg.coherent.z_at_q1) : Complex(cfg.coherent.z_factor * rad.rho);
        clower_s = detail::fmt17(coherent_lowering_defect(m, z, cfg.coherent.eps).defect);
      }

      const LadderVectors lv = xi_vectors(m, m.valid_depth);
      const OverlapReport ov = overlap_matrix(lv, m);
      std::string biorth_s = "-";
      if (!m.hermitian && m.q != -1.0)
        biorth_s = detail::fmt17(
            biorthogonality_check(m, m.valid_depth).max_normalized_offdiag);

      for (int l = 0; l <= m.valid_depth; ++l) {
        const double mass = tau(ladder_form(m, l).weight()).real();
        std::vector<std::string> cells{
            detail::fmtg(t.q),
            std::to_string(t.levels),
            detail::fmtg(t.p),
            t.model,
            std::to_string(l),
            detail::fmt17(bs.values[static_cast<std::size_t>(l)]),
            detail::fmt17(bs.factorials[static_cast<std::size_t>(l)]),
            detail::fmt17(mass),
            detail::fmt17(number_eigen_defect(m, l)),
            l >= 1 ? detail::fmt17(lowering_defect(m, l)) : "-",
            detail::fmt17(ov.overlaps(l, l).real()),
            m.hermitian ? detail::fmt17(ov.max_normalized_offdiag) : "-",
            biorth_s,
            radius_s,
            clower_s,
            detail::fmt17(nr.op_norm),
            detail::fmt17(nr.bound_sq)};
        for (std::size_t c = 0; c < cells.size(); ++c) {
          tsv += cells[c];
          tsv += c + 1 < cells.size() ? '\t' : '\n';
        }
      }
    } catch (const config_error&) {
      throw;
    } catch (const std::exception&) {
      aborted = true;
    }
  }

  std::filesystem::create_directories(cfg.output_dir);
  detail::write_text(std::filesystem::path(cfg.output_dir) / "sweep.tsv", tsv);
  result.written_files.push_back("sweep.tsv");
  result.exit_code = aborted ? 3 : 0;
  return result;
}

}  // namespace sesqui::harness
