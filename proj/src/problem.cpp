#include "lintest/problem.hpp"

#include <cmath>
#include <sstream>

#include "lintest/errors.hpp"

namespace lintest {

std::vector<std::string> ProblemConfig::violations() const {
  std::vector<std::string> out;
  auto fail = [&out](auto&&... parts) {
    std::ostringstream os;
    (os << ... << parts);
    out.push_back(os.str());
  };
  if (n < 1) fail("n must be >= 1 (got ", n, ")");
  if (p < 1) fail("p must be >= 1 (got ", p, ")");
  if (q < 1) fail("q must be >= 1 (got ", q, ")");
  if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha must lie in (0,1) (got ", alpha, ")");
  if (!(beta > alpha && beta < 1.0)) fail("beta must lie in (alpha,1) (got ", beta, ")");
  if (!(std::isfinite(b) && b >= 0.0)) fail("b must be finite and >= 0 (got ", b, ")");
  if (kappa) {
    if (!(*kappa > 0.0)) {
      fail("kappa must be > 0 (got ", *kappa, ")");
    } else if (n >= 1 && static_cast<double>(p + q) / n > *kappa) {
      fail("(p+q)/n must be <= kappa (got (", p, "+", q, ")/", n, " > ", *kappa, ")");
    }
  }
  return out;
}

void ProblemConfig::validate() const {
  const auto errs = violations();
  if (errs.empty()) return;
  std::string msg = "invalid problem config:";
  for (const auto& e : errs) msg += "\n  " + e;
  throw DomainError(msg);
}

}  // namespace lintest
