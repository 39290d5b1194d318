#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lintest/problem.hpp"
#include "lintest/rng.hpp"
#include "lintest/structured_cov.hpp"

namespace lintest {

struct TestDecision {
  double statistic = 0.0;  // ||Sigma_hat_XY||_F^2 of the observed data
  double p_value = 1.0;
  bool reject = false;
  int permutations = 0;
};

struct Interval {
  double low = 0.0;
  double high = 1.0;
};

// Wilson score interval for k successes out of n at normal quantile z.
Interval wilson_interval(std::int64_t successes, std::int64_t trials, double z);

inline constexpr double z95 = 1.959963984540054;
inline constexpr double z99 = 2.5758293035489004;

struct PowerEstimate {
  std::int64_t trials = 0;
  std::int64_t rejections = 0;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  std::string regime;  // "null", "least_favorable", "paired", or a scenario id
  double signal = 0.0; // b, s, or scenario signal, depending on regime

  // Binomial standard error of the point estimate.
  double std_error() const;
};

PowerEstimate make_power_estimate(std::int64_t rejections, std::int64_t trials,
                                  std::string regime, double signal, double z = z95);

// Squared Frobenius norm of the sample cross-covariance. Uncentered uses 1/n
// and assumes mean zero; centered subtracts column means and uses 1/(n-1).
double cross_cov_stat(const Dataset& ds, bool centered = false);

// Permutation calibration of cross_cov_stat: Y rows are shuffled B times with
// X held fixed; p = (1 + #{permuted >= observed}) / (B + 1).
// Throws DomainError for B < 19 or alpha outside (0, 1].
TestDecision permutation_test(const Dataset& ds, int permutations, double alpha, Rng& rng,
                              bool centered = false);

inline constexpr int default_permutations = 200;
inline constexpr std::int64_t default_trials = 1000;

struct RunOptions {
  std::int64_t trials = default_trials;
  int permutations = default_permutations;
  std::uint64_t seed = 1;
  int workers = 0;  // 0: hardware concurrency
  bool centered = false;
};

// Rejection rate under N(0, I). Needs trials >= 100.
PowerEstimate estimate_level(const ProblemConfig& cfg, const RunOptions& opts);

// Rejection rate averaged over the least-favorable prior: fresh (u, v) per trial.
PowerEstimate estimate_avg_power(const ProblemConfig& cfg, const RunOptions& opts);

// Alternatives used to trace power against s = n ||Sigma_XY||_F^2 / sqrt(pq).
enum class AlternativeFamily {
  least_favorable,  // rank one, I + a(uv' + vu'); needs s < n / sqrt(pq)
  paired,           // min(p,q) disjoint coordinate pairs with correlation +-c; needs s < n min(p,q) / sqrt(pq)
};

const char* to_string(AlternativeFamily family);
AlternativeFamily parse_family(const std::string& name);

// b = sqrt(2 s) puts the least-favorable family at ||Sigma_XY||_F^2 = s sqrt(pq) / n.
double signal_to_b(double s);

// Cross-covariance with min(p,q) nonzero entries of magnitude c at distinct
// rows and columns, signs random. Singular values all equal c.
struct PairedCov {
  int p = 0;
  int q = 0;
  double c = 0.0;
  std::vector<int> x_index;  // paired coordinates, one per pair
  std::vector<int> y_index;
  std::vector<double> sign;

  double cross_frobenius_sq() const { return c * c * static_cast<double>(sign.size()); }
};

// Largest s each family can host at (n, p, q); the supremum is excluded.
double max_signal(AlternativeFamily family, int n, int p, int q);

PairedCov sample_paired_cov(int n, int p, int q, double s, Rng& rng);
Dataset sample_paired_dataset(const PairedCov& cov, int n, Rng& rng);

// Average power of one alternative family at signal s.
PowerEstimate estimate_family_power(int n, int p, int q, double s, AlternativeFamily family,
                                    double alpha, const RunOptions& opts);

struct PhasePoint {
  double s = 0.0;
  PowerEstimate power;
};

// Power at each s in the grid. Every s is checked against max_signal before
// any simulation starts (SingularCovariance on violation). Each grid point
// runs on its own derived seed.
std::vector<PhasePoint> phase_curve(int n, int p, int q, std::span<const double> s_grid,
                                    double alpha, const RunOptions& opts,
                                    AlternativeFamily family = AlternativeFamily::least_favorable);

struct RegressionScenario {
  Eigen::VectorXd beta;      // coefficients, length p
  double sigma = 1.0;        // noise standard deviation
  Eigen::MatrixXd sigma_x;   // empty means identity
};

struct TwoSampleScenario {
  Eigen::VectorXd mu1;
  Eigen::VectorXd mu2;
};

using ScenarioSpec = std::variant<RegressionScenario, TwoSampleScenario>;

// Y = X beta + sigma e with X ~ N_p(0, Sigma_X); q = 1.
Dataset scenario_regression(const RegressionScenario& spec, int n, Rng& rng);

// W ~ Ber(1/2), X | W ~ N(mu1, I) if W = 1 else N(mu2, I), Y = 2W - 1.
Dataset scenario_two_sample(const TwoSampleScenario& spec, int n, Rng& rng);

Dataset sample_scenario(const ScenarioSpec& spec, int n, Rng& rng);

// Population Sigma_XY implied by the scenario (p x 1).
Eigen::VectorXd scenario_cross_cov(const ScenarioSpec& spec);

// Rejection rate on scenario data; uses opts.centered.
PowerEstimate estimate_scenario_power(const ScenarioSpec& spec, int n, double alpha,
                                      const RunOptions& opts);

}  // namespace lintest
