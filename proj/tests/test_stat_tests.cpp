#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "lintest/errors.hpp"
#include "lintest/stat_tests.hpp"
#include "test_helpers.hpp"

using namespace lintest;
using lintest::testing::uniform_int;

namespace {

Dataset from_columns(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  Dataset ds;
  ds.p = static_cast<int>(x.cols());
  ds.q = static_cast<int>(y.cols());
  ds.values.resize(x.rows(), ds.p + ds.q);
  ds.values << x, y;
  return ds;
}

// p-value recomputed from explicitly permuted copies of the data.
double reference_p_value(const Dataset& ds, int permutations, Rng rng, bool centered) {
  const double observed = cross_cov_stat(ds, centered);
  std::vector<int> perm(static_cast<std::size_t>(ds.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  int at_least = 0;
  for (int b = 0; b < permutations; ++b) {
    std::shuffle(perm.begin(), perm.end(), rng);
    Dataset shuffled = ds;
    for (int i = 0; i < ds.rows(); ++i) shuffled.values.row(i).tail(ds.q) = ds.y().row(perm[i]);
    if (cross_cov_stat(shuffled, centered) >= observed * (1.0 - 1e-12)) ++at_least;
  }
  return (1.0 + at_least) / (permutations + 1.0);
}

}  // namespace

TEST_CASE("wilson_interval") {
  const auto ci = wilson_interval(5, 10, z95);
  CHECK(ci.low == doctest::Approx(0.23659309).epsilon(1e-7));
  CHECK(ci.high == doctest::Approx(0.76340691).epsilon(1e-7));
  CHECK(wilson_interval(0, 50, z95).low == 0.0);
  CHECK(wilson_interval(50, 50, z95).high == doctest::Approx(1.0).epsilon(1e-15));
  for (std::int64_t n : {1, 7, 100, 2000}) {
    for (std::int64_t k = 0; k <= n; k += std::max<std::int64_t>(1, n / 13)) {
      const auto a = wilson_interval(k, n, z95), b = wilson_interval(k, n, z99);
      const double phat = double(k) / n;
      CHECK(a.low >= 0.0);
      CHECK(a.high <= 1.0);
      CHECK(a.low <= phat + 1e-15);
      CHECK(a.high >= phat - 1e-15);
      CHECK(b.low <= a.low + 1e-15);
      CHECK(b.high >= a.high - 1e-15);
    }
  }
  CHECK_THROWS_AS(wilson_interval(3, 0, z95), DomainError);
  CHECK_THROWS_AS(wilson_interval(5, 4, z95), DomainError);
}

TEST_CASE("make_power_estimate") {
  const auto e = make_power_estimate(30, 200, "null", 0.0);
  CHECK(e.estimate == doctest::Approx(0.15));
  CHECK(e.std_error() == doctest::Approx(std::sqrt(0.15 * 0.85 / 200)));
  CHECK(e.ci_low < 0.15);
  CHECK(e.ci_high > 0.15);
}

TEST_CASE("cross_cov_stat") {
  Eigen::MatrixXd x(2, 1), y(2, 1);
  x << 1, -1;
  y << 1, -1;
  CHECK(cross_cov_stat(from_columns(x, y)) == doctest::Approx(1.0));
  CHECK(cross_cov_stat(from_columns(x, Eigen::MatrixXd::Zero(2, 1))) == 0.0);
  // Centered: mean removal and the 1/(n-1) divisor.
  CHECK(cross_cov_stat(from_columns(x, y), true) == doctest::Approx(4.0));

  Rng rng(12);
  const Dataset ds = sample_null_dataset(15, 3, 4, rng);
  Dataset shuffled = ds;
  std::vector<int> perm(15);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (int i = 0; i < 15; ++i) shuffled.values.row(i) = ds.values.row(perm[i]);
  CHECK(cross_cov_stat(shuffled) == doctest::Approx(cross_cov_stat(ds)).epsilon(1e-12));
  CHECK(cross_cov_stat(shuffled, true) == doctest::Approx(cross_cov_stat(ds, true)).epsilon(1e-12));

  // Under N(0, I), E[n ||Sigma_hat_XY||_F^2] = pq exactly for the uncentered form.
  const int n = 20, p = 3, q = 2, reps = 4000;
  double sum = 0.0, sum_sq = 0.0;
  for (int r = 0; r < reps; ++r) {
    const double t = n * cross_cov_stat(sample_null_dataset(n, p, q, rng));
    sum += t;
    sum_sq += t * t;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sum_sq / reps - mean * mean) / reps);
  CHECK(std::abs(mean - p * q) < 4.0 * se);
}

TEST_CASE("permutation_test") {
  Rng rng(99);
  SUBCASE("Gram and direct paths agree with explicit permutation") {
    for (auto [n, p, q] : {std::tuple{6, 3, 3}, std::tuple{40, 2, 2}, std::tuple{9, 3, 3}, std::tuple{10, 3, 3}}) {
      for (bool centered : {false, true}) {
        const Dataset ds = sample_null_dataset(n, p, q, rng);
        const Rng snapshot = rng;
        const auto d = permutation_test(ds, 49, 0.05, rng, centered);
        CHECK(d.p_value == doctest::Approx(reference_p_value(ds, 49, snapshot, centered)));
        CHECK(d.statistic == doctest::Approx(cross_cov_stat(ds, centered)));
      }
    }
  }
  SUBCASE("p-values lie on the (B+1) grid") {
    for (int rep = 0; rep < 30; ++rep) {
      const auto d = permutation_test(sample_null_dataset(12, 2, 3, rng), 19, 0.05, rng);
      const double k = d.p_value * 20.0;
      CHECK(std::abs(k - std::round(k)) < 1e-12);
      CHECK(d.p_value >= 1.0 / 20.0);
      CHECK(d.p_value <= 1.0);
      CHECK(d.reject == (d.p_value <= 0.05));
    }
  }
  SUBCASE("a strong signal gets the smallest p-value") {
    Eigen::MatrixXd x(30, 1);
    for (int i = 0; i < 30; ++i) x(i, 0) = i - 14.5;
    const auto d = permutation_test(from_columns(x, x), 99, 0.05, rng);
    CHECK(d.p_value == doctest::Approx(0.01));
    CHECK(d.reject);
  }
  SUBCASE("argument checks") {
    const Dataset ds = sample_null_dataset(5, 2, 2, rng);
    CHECK_THROWS_AS(permutation_test(ds, 18, 0.05, rng), DomainError);
    CHECK_THROWS_AS(permutation_test(ds, 19, 0.0, rng), DomainError);
    CHECK_THROWS_AS(permutation_test(ds, 19, 1.5, rng), DomainError);
  }
}

TEST_CASE("level and power estimators") {
  ProblemConfig cfg;
  cfg.n = 20;
  cfg.p = 3;
  cfg.q = 3;
  cfg.alpha = 0.05;
  RunOptions opts;
  opts.trials = 600;
  opts.permutations = 19;
  opts.seed = 3;

  const auto level = estimate_level(cfg, opts);
  const auto ci = wilson_interval(level.rejections, level.trials, z99);
  CHECK(ci.low <= 0.05);
  CHECK(ci.high >= 0.05);
  CHECK(level.regime == "null");

  opts.workers = 1;
  const auto one = estimate_level(cfg, opts);
  opts.workers = 3;
  const auto three = estimate_level(cfg, opts);
  CHECK(one.rejections == three.rejections);
  CHECK(one.rejections == level.rejections);

  ProblemConfig always = cfg;
  always.alpha = 1.0;
  CHECK(estimate_level(always, opts).estimate == 1.0);

  ProblemConfig flat = cfg;
  flat.b = 0.0;
  const auto power0 = estimate_avg_power(flat, opts);
  const auto ci0 = wilson_interval(power0.rejections, power0.trials, z99);
  CHECK(ci0.low <= 0.05);
  CHECK(ci0.high >= 0.05);

  ProblemConfig strong = cfg;
  strong.b = 0.95 * std::sqrt(2.0 * cfg.n) / std::sqrt(3.0);  // a sqrt(pq) = 0.95
  CHECK(estimate_avg_power(strong, opts).estimate > 0.5);

  RunOptions few = opts;
  few.trials = 99;
  CHECK_THROWS_AS(estimate_level(cfg, few), DomainError);
  ProblemConfig singular = cfg;
  singular.b = 2.0 * std::sqrt(2.0 * cfg.n) / std::sqrt(3.0);
  CHECK_THROWS_AS(estimate_avg_power(singular, opts), SingularCovariance);
}

TEST_CASE("families and phase_curve") {
  CHECK(signal_to_b(2.0) == doctest::Approx(2.0));
  CHECK(parse_family("paired") == AlternativeFamily::paired);
  CHECK(std::string(to_string(AlternativeFamily::least_favorable)) == "least_favorable");
  CHECK_THROWS_AS(parse_family("nope"), DomainError);
  CHECK(max_signal(AlternativeFamily::least_favorable, 200, 10, 10) == doctest::Approx(20.0));
  CHECK(max_signal(AlternativeFamily::paired, 200, 10, 10) == doctest::Approx(200.0));

  Rng rng(5);
  const auto cov = sample_paired_cov(200, 6, 4, 3.0, rng);
  CHECK(cov.sign.size() == 4u);
  CHECK(std::set<int>(cov.x_index.begin(), cov.x_index.end()).size() == 4u);
  CHECK(std::set<int>(cov.y_index.begin(), cov.y_index.end()).size() == 4u);
  CHECK(200.0 * cov.cross_frobenius_sq() / std::sqrt(24.0) == doctest::Approx(3.0));
  CHECK_THROWS_AS(sample_paired_cov(200, 10, 10, 200.0, rng), SingularCovariance);

  // Sample cross-covariance of the paired family at n = 1e5.
  const int n = 100000;
  const auto strong = sample_paired_cov(10, 3, 2, 5.0, rng);
  const Dataset ds = sample_paired_dataset(strong, n, rng);
  const Eigen::MatrixXd cross = ds.x().transpose() * ds.y() / double(n);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 2; ++j) {
      double expect = 0.0;
      for (std::size_t k = 0; k < strong.sign.size(); ++k)
        if (strong.x_index[k] == i && strong.y_index[k] == j) expect = strong.sign[k] * strong.c;
      CHECK(std::abs(cross(i, j) - expect) < 4.0 / std::sqrt(double(n)));
    }
  }

  RunOptions opts;
  opts.trials = 200;
  opts.permutations = 19;
  const std::vector<double> grid{0.0, 3.0};
  const auto curve = phase_curve(40, 4, 4, grid, 0.05, opts, AlternativeFamily::paired);
  CHECK(curve.size() == 2u);
  CHECK(curve[0].s == 0.0);
  CHECK(curve[1].power.regime == "paired");
  opts.workers = 2;
  const auto again = phase_curve(40, 4, 4, grid, 0.05, opts, AlternativeFamily::paired);
  CHECK(again[1].power.rejections == curve[1].power.rejections);

  const std::vector<double> too_big{1.0, 10.0};  // least-favorable cap at (40,4,4) is 10
  CHECK_THROWS_AS(phase_curve(40, 4, 4, too_big, 0.05, opts), SingularCovariance);
}

TEST_CASE("scenarios") {
  Rng rng(2);
  const int n = 100000;
  RegressionScenario reg;
  reg.beta = Eigen::Vector3d(0.5, -0.2, 0.0);
  reg.sigma = 0.7;
  reg.sigma_x = Eigen::Matrix3d{{1.0, 0.3, 0.0}, {0.3, 1.0, 0.2}, {0.0, 0.2, 1.0}};
  CHECK((scenario_cross_cov(reg) - reg.sigma_x * reg.beta).norm() < 1e-15);

  const Dataset ds = scenario_regression(reg, n, rng);
  const Eigen::VectorXd cross = ds.x().transpose() * ds.y() / double(n);
  CHECK((cross - scenario_cross_cov(reg)).cwiseAbs().maxCoeff() < 4.0 / std::sqrt(double(n)));
  const Eigen::MatrixXd sx = ds.x().transpose() * ds.x() / double(n);
  CHECK((sx - reg.sigma_x).cwiseAbs().maxCoeff() < 6.0 / std::sqrt(double(n)));

  TwoSampleScenario two{Eigen::Vector2d(0.3, 0.0), Eigen::Vector2d(-0.1, 0.2)};
  CHECK((scenario_cross_cov(two) - Eigen::Vector2d(0.2, -0.1)).norm() < 1e-15);
  const Dataset ts = scenario_two_sample(two, n, rng);
  const Eigen::VectorXd tcross = ts.x().transpose() * ts.y() / double(n);
  CHECK((tcross - scenario_cross_cov(two)).cwiseAbs().maxCoeff() < 4.0 / std::sqrt(double(n)));
  CHECK(ts.y().cwiseAbs().minCoeff() == 1.0);

  RegressionScenario bad = reg;
  bad.sigma_x = -reg.sigma_x;
  CHECK_THROWS_AS(scenario_regression(bad, 10, rng), DomainError);
  CHECK_THROWS_AS(scenario_two_sample({Eigen::Vector2d::Zero(), Eigen::Vector3d::Zero()}, 10, rng), DomainError);

  RunOptions opts;
  opts.trials = 200;
  opts.permutations = 19;
  opts.centered = true;
  const auto null_power = estimate_scenario_power(TwoSampleScenario{Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()}, 30, 0.05, opts);
  CHECK(wilson_interval(null_power.rejections, null_power.trials, z99).low <= 0.05);
  const auto alt = estimate_scenario_power(TwoSampleScenario{Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(-1.0, 0.0)}, 30, 0.05, opts);
  CHECK(alt.estimate > 0.9);
}
