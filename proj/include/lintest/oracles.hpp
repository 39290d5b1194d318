#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>

namespace lintest {

// One closed-form vs brute-force comparison.
struct OracleReport {
  std::string name;
  double closed_form = 0.0;
  double brute_force = 0.0;
  double abs_err = 0.0;
  double rel_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// pass <=> rel_err <= tolerance, or abs_err <= tolerance when the reference is 0.
// scale_floor > 0 measures rel_err against max(|brute_force|, scale_floor).
OracleReport compare(std::string name, double closed_form, double brute_force,
                     double tolerance, double scale_floor = 0.0);

// pass <=> |closed_form - brute_force| <= abs_tolerance (Monte Carlo rows).
OracleReport compare_abs(std::string name, double closed_form, double brute_force,
                         double abs_tolerance);

// pass <=> exact <= bound; abs_err and rel_err record the violation, if any.
OracleReport compare_upper_bound(std::string name, double bound, double exact);

// Average of (1 - a^2 (u'g)(v'h))^{-n} over all 4^{p+q} sign quadruples, minus 1.
// Extended precision with compensated summation. Requires p + q <= 8.
double enumerate_chi_square(int n, int p, int q, double b);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::int64_t trials = 0;
};

// Monte Carlo estimate of E_0[(f1/f0)^2] - 1 with the mixture density ratio
// evaluated exactly from the dense covariances of all 2^{p+q} members.
// Requires p + q <= 5 and n <= 4.
McEstimate mc_chi_square(int n, int p, int q, double b, std::int64_t trials,
                         std::uint64_t seed, int workers = 0);

// Sorted eigenvalues of Sigma_chi^{1/2} A Sigma_chi^{1/2}, built densely from
// the sign vectors.
std::array<double, 4> gamma_numeric(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                                    const Eigen::VectorXd& g, const Eigen::VectorXd& h,
                                    double a);

// T(u,v,z) + T(g,h,z) evaluated term by term, and chi' A chi with
// chi = (u'z, v'z, g'z, h'z). z has length p + q.
double quad_form_direct(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                        const Eigen::VectorXd& g, const Eigen::VectorXd& h, double a,
                        const Eigen::VectorXd& z);
double quad_form_matrix(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                        const Eigen::VectorXd& g, const Eigen::VectorXd& h, double a,
                        const Eigen::VectorXd& z);

// Exact P(|UV| >= threshold) for independent symmetric binomial sums. p, q <= 12.
double enumerate_uv_tail(int p, int q, double threshold);

// (1 - x)^{-1/x}, continuous at 0.
double log_bound_function(double x);

}  // namespace lintest
