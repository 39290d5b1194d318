// lintest: batch runner for the divergence calculators, oracle suite and
// permutation-test power experiments. CSV/JSON on stdout (or --out),
// progress on stderr.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <utility>

#include "lintest/runner.hpp"

int main(int argc, char** argv) {
  lintest::ExperimentConfig cfg;
  double b = -1.0;

  CLI::App app{"Minimax linear independence testing laboratory"};
  app.set_config("--config", "", "Flat key = value file; command-line flags take precedence");
  app.require_subcommand(1, 1);
  app.fallthrough();

  app.add_option("--seed", cfg.seed, "Master seed (u64)");
  app.add_option("--trials", cfg.trials, "Monte Carlo trials per row");
  app.add_option("--perms", cfg.permutations, "Permutations per test");
  app.add_option("--out", cfg.out, "Output file (default: standard output)");
  app.add_option("--alpha", cfg.alpha, "Test level");
  app.add_option("--beta", cfg.beta, "Target power");
  app.add_option("--kappa", cfg.kappa, "Aspect bound on (p+q)/n");
  app.add_option("--b", b, "Signal constant (default: derived from kappa, alpha, beta)");
  app.add_option("--grid-n", cfg.grid_n, "Sample sizes")->delimiter(',');
  app.add_option("--grid-p", cfg.grid_p, "X dimensions")->delimiter(',');
  app.add_option("--grid-q", cfg.grid_q, "Y dimensions")->delimiter(',');
  app.add_option("--grid-s", cfg.grid_s, "Signals s = n ||Sigma_XY||_F^2 / sqrt(pq)")->delimiter(',');
  app.add_option("--grid-mode", cfg.grid_mode, "product (cartesian) or zip (elementwise)");
  app.add_option("--regime", cfg.regime, "power: null, least_favorable or both");
  app.add_option("--family", cfg.family, "phase: least_favorable or paired");
  app.add_flag("--centered", cfg.centered, "Use the mean-centred cross-covariance statistic");
  app.add_option("--workers", cfg.workers, "Worker threads (0: all cores); never changes output");
  app.add_option("--mc-trials", cfg.mc_trials, "verify: Monte Carlo draws per chi-square check");
  app.add_flag("--perturb", cfg.perturb, "verify: negative control, perturbs one eigenvalue");

  const std::pair<const char*, const char*> commands[] = {
      {"bound", "Exact chi-square, closed bound and power ceiling per grid point"},
      {"verify", "Closed forms against brute-force oracles"},
      {"power", "Permutation-test level and least-favorable power per grid point"},
      {"phase", "Power against s for one alternative family"},
      {"divergence", "Divergence report for a single (n,p,q) as JSON"},
  };
  for (const auto& [name, about] : commands)
    app.add_subcommand(name, about)->callback([&cfg, name] { cfg.command = name; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? lintest::kExitOk : lintest::kExitValidation;
  }
  if (app.count("--b") > 0 || b >= 0.0) cfg.b = b;

  if (cfg.out.empty()) return lintest::run_command(cfg, std::cout, std::cerr);
  std::ofstream file(cfg.out, std::ios::binary);
  if (!file) {
    std::cerr << "cannot open output file " << cfg.out << '\n';
    return lintest::kExitValidation;
  }
  return lintest::run_command(cfg, file, std::cerr);
}
