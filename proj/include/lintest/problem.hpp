#pragma once

#include <optional>
#include <string>
#include <vector>

namespace lintest {

// Dimensions and error-rate targets for one testing problem.
struct ProblemConfig {
  int n = 1;
  int p = 1;
  int q = 1;
  double alpha = 0.05;
  double beta = 0.35;
  std::optional<double> kappa;  // aspect bound on (p + q) / n
  double b = 0.0;               // signal constant

  // Every violated constraint, one message each. Empty when valid.
  std::vector<std::string> violations() const;

  // Throws DomainError listing all violations.
  void validate() const;
};

}  // namespace lintest
