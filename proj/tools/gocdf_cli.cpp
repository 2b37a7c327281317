#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gocdf/gocdf.hpp"

namespace {

gocdf::ExperimentConfig load(const std::string& path, const std::vector<std::string>& solvers,
                             const std::vector<double>& tols, long seed, const std::string& out) {
  gocdf::ExperimentConfig e = gocdf::parse_experiment(gocdf::Config::load(path));
  if (!solvers.empty()) {
    for (const auto& s : solvers) {
      const auto& ids = gocdf::solver_ids();
      if (std::find(ids.begin(), ids.end(), s) == ids.end()) throw gocdf::ConfigError("unknown solver '" + s + "'");
    }
    e.solvers = solvers;
  }
  if (!tols.empty()) e.tols = tols;
  if (seed >= 0) e.init_seed = static_cast<std::uint64_t>(seed);
  if (!out.empty()) e.out_dir = out;
  return e;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constraint-dissolving and Riemannian solvers for generalized orthogonality constraints"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::vector<std::string> solvers;
  std::vector<double> tols;
  long seed = -1;
  long iters = 100;

  auto* run = app.add_subcommand("run", "run a solver x tolerance grid from a config file");
  run->add_option("--config", config_path, "experiment config")->required()->check(CLI::ExistingFile);
  run->add_option("--solver", solvers, "solver id (repeatable)");
  run->add_option("--tol", tols, "gradient tolerance (repeatable)");
  run->add_option("--seed", seed, "initial-point seed");
  run->add_option("--out", out_dir, "output directory");

  auto* profile = app.add_subcommand("profile", "fixed-iteration timing breakdown");
  profile->add_option("--config", config_path, "experiment config")->required()->check(CLI::ExistingFile);
  profile->add_option("--solver", solvers, "solver id (repeatable)");
  profile->add_option("--iters", iters, "iterations per solver")->check(CLI::PositiveNumber);
  profile->add_option("--seed", seed, "initial-point seed");
  profile->add_option("--out", out_dir, "output directory");

  auto* selftest = app.add_subcommand("selftest", "run the invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      const auto e = load(config_path, solvers, tols, seed, out_dir);
      const auto records = gocdf::run(e);
      std::cout << gocdf::emit_table(records, gocdf::TableFormat::Text);
      std::cout << "wrote " << e.out_dir << "/results.csv\n";
      return 0;
    }
    if (*profile) {
      auto e = load(config_path, solvers, {}, seed, out_dir);
      const auto prof = gocdf::timing_profile(e, iters);
      const std::string csv = gocdf::emit_profile(prof);
      std::cout << csv;
      if (!out_dir.empty()) {
        std::filesystem::create_directories(e.out_dir);
        std::ofstream(std::filesystem::path(e.out_dir) / "profile.csv") << csv;
      }
      return 0;
    }
    if (*selftest) {
      bool ok = true;
      for (const auto& r : gocdf::run_selftest()) {
        std::printf("%s  %-55s %.3e (limit %.0e)\n", r.pass() ? "PASS" : "FAIL", r.name.c_str(), r.value, r.limit);
        ok = ok && r.pass();
      }
      return ok ? 0 : 2;
    }
  } catch (const gocdf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
