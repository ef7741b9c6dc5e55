// Command line front end for the check harness: runs the full battery or a
// single section over a (q, levels, p) grid and writes JSON reports plus an
// optional TSV sweep table.
//
// Exit codes: 0 all checks pass, 1 configuration problem, 2 at least one
// check failed, 3 a computation aborted.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sesqui/harness.hpp"

namespace {

struct CliOpts {
  std::string config_path;
  std::vector<double> q;
  std::vector<int> levels;
  std::vector<double> p;
  std::uint64_t seed = 0;
  std::string out;
  std::string similarity;
  std::vector<double> sim_entries;
  double eps = 0.0;
  double z_factor = 0.0;
  double z_at_q1 = 0.0;
  double rank_tol = -1.0;
};

void add_common_options(CLI::App* sub, CliOpts& o) {
  sub->add_option("--config", o.config_path, "JSON config file; flags override its values");
  sub->add_option("--q", o.q, "deformation parameters in [-1, 1]");
  sub->add_option("--levels", o.levels, "truncation levels N (>= 2)");
  sub->add_option("--p", o.p, "ambient norm exponents (>= 2)");
  sub->add_option("--seed", o.seed, "seed for the randomized checks");
  sub->add_option("--out", o.out, "output directory for reports");
  sub->add_option("--similarity", o.similarity,
                  "pseudo-model similarity: none, diagonal, random, both");
  sub->add_option("--similarity-entries", o.sim_entries,
                  "diagonal similarity entries (length N+1)");
  sub->add_option("--eps", o.eps, "coherent truncation accuracy");
  sub->add_option("--z-factor", o.z_factor, "coherent probe at z = z_factor * rho");
  sub->add_option("--z-at-q1", o.z_at_q1, "coherent probe point at q = 1");
  sub->add_option("--rank-tol", o.rank_tol, "quotient rank cutoff; negative = automatic");
}

sesqui::harness::RunConfig make_config(const CLI::App* sub, const CliOpts& o) {
  sesqui::harness::RunConfig cfg;
  if (!o.config_path.empty()) cfg = sesqui::harness::load_config(o.config_path);
  if (sub->count("--q")) cfg.q_grid = o.q;
  if (sub->count("--levels")) cfg.n_grid = o.levels;
  if (sub->count("--p")) cfg.p_grid = o.p;
  if (sub->count("--seed")) cfg.seed = o.seed;
  if (sub->count("--out")) cfg.output_dir = o.out;
  if (sub->count("--similarity"))
    cfg.similarity.kind = sesqui::harness::similarity_kind_from(o.similarity);
  if (sub->count("--similarity-entries")) cfg.similarity.entries = o.sim_entries;
  if (sub->count("--eps")) cfg.coherent.eps = o.eps;
  if (sub->count("--z-factor")) cfg.coherent.z_factor = o.z_factor;
  if (sub->count("--z-at-q1")) cfg.coherent.z_at_q1 = o.z_at_q1;
  if (sub->count("--rank-tol")) cfg.gns_rank_tol = o.rank_tol;
  sesqui::harness::validate_config(cfg);
  return cfg;
}

int run_checks(const sesqui::harness::RunConfig& cfg, const std::set<std::string>& sections) {
  const sesqui::harness::SuiteResult res = sesqui::harness::run_suite(cfg, sections);

  std::ifstream in(std::filesystem::path(cfg.output_dir) / "summary.json");
  nlohmann::json summary;
  in >> summary;
  for (const auto& pt : summary.at("points")) {
    const std::string err = pt.at("error").get<std::string>();
    const int skipped = pt.at("skipped").get<int>();
    std::printf("%-44s %3d checks, %2d skipped, %d failed%s%s\n",
                pt.at("file").get<std::string>().c_str(),
                pt.at("checks").get<int>() - skipped, skipped,
                pt.at("failed").get<int>(), err.empty() ? "" : "  ABORTED: ",
                err.c_str());
  }
  std::printf("total: %d checks, %d failed\n", res.total_checks, res.failures);
  if (!res.first_failure.empty())
    std::printf("first failure: %s\n", res.first_failure.c_str());
  for (const std::string& id : res.unused_overrides)
    std::printf("note: tolerance override '%s' matched no executed check\n", id.c_str());
  std::printf("reports written to %s\n", cfg.output_dir.c_str());
  return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-dimensional workbench for weighted trace forms, quon ladders,"
               " coherent forms and GNS data"};
  app.require_subcommand(1);
  CliOpts opts;

  CLI::App* suite = app.add_subcommand("suite", "run every check section");
  CLI::App* sweep = app.add_subcommand("sweep", "write the flat per-level TSV table");
  CLI::App* quon = app.add_subcommand("quon", "run the ladder checks only");
  CLI::App* coherent = app.add_subcommand("coherent", "run the coherent-form checks only");
  CLI::App* gns = app.add_subcommand("gns", "run the representation checks only");
  for (CLI::App* sub : {suite, sweep, quon, coherent, gns}) add_common_options(sub, opts);

  try {
    app.parse(argc, argv);
    const CLI::App* sub = app.get_subcommands().front();
    const sesqui::harness::RunConfig cfg = make_config(sub, opts);
    if (sub == sweep) {
      const sesqui::harness::SuiteResult res = sesqui::harness::sweep_table(cfg);
      std::printf("sweep table written to %s/sweep.tsv\n", cfg.output_dir.c_str());
      return res.exit_code;
    }
    std::set<std::string> sections;
    if (sub == quon) sections = {"quon"};
    if (sub == coherent) sections = {"coh"};
    if (sub == gns) sections = {"gns"};
    return run_checks(cfg, sections);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const sesqui::harness::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
