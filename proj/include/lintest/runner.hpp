#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lintest/oracles.hpp"

namespace lintest {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitOracle = 2,
  kExitNumerical = 3,
};

// Everything a batch command reads. Loaded from a key = value file and/or flags.
struct ExperimentConfig {
  std::string command;  // bound | verify | power | phase | divergence

  std::uint64_t seed = 1;
  std::int64_t trials = 1000;
  int permutations = 200;
  std::string out;  // empty: standard output
  int workers = 0;  // never affects output

  double alpha = 0.05;
  double beta = 0.35;
  double kappa = 1.0;
  std::optional<double> b;  // unset: select_b(kappa, alpha, beta)

  std::vector<int> grid_n;
  std::vector<int> grid_p;
  std::vector<int> grid_q;
  std::vector<double> grid_s;
  std::string grid_mode = "product";  // product | zip

  std::string regime = "both";             // power: null | least_favorable | both
  std::string family = "least_favorable";  // phase: least_favorable | paired
  bool centered = false;

  std::int64_t mc_trials = 200000;  // verify: Monte Carlo draws per chi-square check
  bool perturb = false;             // verify: scale one gamma by 1 + 1e-3
};

struct GridPoint {
  int n = 0;
  int p = 0;
  int q = 0;
};

// Every violated constraint for cfg.command; empty when the run may start.
std::vector<std::string> validate(const ExperimentConfig& cfg);

std::vector<GridPoint> grid_points(const ExperimentConfig& cfg);

// Canonical text of every output-affecting setting (not out or workers).
std::string canonical_config(const ExperimentConfig& cfg);
// FNV-1a 64 of canonical_config, as 16 hex digits.
std::string fingerprint(const ExperimentConfig& cfg);

// The verify suite; `perturb` scales the first closed-form gamma by 1 + 1e-3.
std::vector<OracleReport> run_oracle_suite(std::uint64_t seed, std::int64_t mc_trials,
                                           bool perturb, int workers = 0);

// Each command validates first, then writes its output to `out` and progress
// to `log`. Returns an ExitCode.
int cmd_bound(const ExperimentConfig& cfg, std::ostream& out, std::ostream& log);
int cmd_verify(const ExperimentConfig& cfg, std::ostream& out, std::ostream& log);
int cmd_power(const ExperimentConfig& cfg, std::ostream& out, std::ostream& log);
int cmd_phase(const ExperimentConfig& cfg, std::ostream& out, std::ostream& log);
int cmd_divergence(const ExperimentConfig& cfg, std::ostream& out, std::ostream& log);

// Dispatches on cfg.command.
int run_command(const ExperimentConfig& cfg, std::ostream& out, std::ostream& log);

}  // namespace lintest
