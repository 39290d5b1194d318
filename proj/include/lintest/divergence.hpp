#pragma once

#include <array>

namespace lintest {

// Eigenvalues gamma_ij of Sigma_chi^{1/2} A Sigma_chi^{1/2} for the
// quadratic form T(u,v,z) + T(g,h,z), indexed as gammas[2*i + j].
struct GammaQuad {
  std::array<double, 4> gammas{};
  double t = 0.0;  // a / (1 - pq a^2)
  double a = 0.0;
  int p = 0;
  int q = 0;
  int ug = 0;  // u'g
  int vh = 0;  // v'h

  double gamma(int i, int j) const { return gammas[2 * i + j]; }
  // prod_ij (1 - t gamma_ij)
  double mgf_product() const;
  // ((1 - a^2 ug vh) / (1 - a^2 pq))^2
  double mgf_product_target() const;
};

// Closed-form eigenvalues. Requires |ug| <= p, |vh| <= q and matching parity;
// throws DomainError otherwise, SingularCovariance if a^2 pq >= 1.
GammaQuad gamma_eigs(double a, int p, int q, int ug, int vh);

// True iff a^2 pq < 1 and t gamma_ij < 1 for every gamma over every achievable (ug, vh).
bool mgf_validity(double a, int p, int q);

struct ValidityFlags {
  bool pd_ok = false;      // a^2 pq < 1
  bool mgf_ok = false;     // chi-square MGF finite for every eigenvalue
  bool b_caps_ok = false;  // b < 1/(2 sqrt((p+q)/n)) and b < 1/sqrt(log 4)
};

struct DivergenceReport {
  double chi2_exact = 0.0;         // int f1^2/f0 - 1
  double chi2_closed_bound = 0.0;  // 4 b^2 log4 / (1 - b^2 log4); +inf past its domain
  double tv_upper = 0.0;           // sqrt(chi2_exact) / 2
  double power_upper = 0.0;        // alpha + tv_upper
  ValidityFlags validity;
};

// E_{U,V}[(1 - a^2 U V)^{-n}] - 1 with U, V sums of p and q Rademacher signs.
// Summed as nonnegative paired terms in log space; O(pq).
// Throws DivergenceInfinite / SingularCovariance when the integral diverges.
double chi_square_exact(int n, int p, int q, double b);

// 4 b^2 log4 / (1 - b^2 log4). Throws DomainError unless 0 <= b < 1/sqrt(log 4).
double chi_square_closed_bound(double b);

// Largest admissible signal constant: min of the power-gap choice and the
// MGF cap 1/(2 sqrt(kappa)) shrunk by select_b_margin.
double select_b(double kappa, double alpha, double beta);
inline constexpr double select_b_margin = 1e-6;

ValidityFlags validity_flags(int n, int p, int q, double b);

// Full chain alpha + TV <= alpha + sqrt(chi2)/2.
DivergenceReport minimax_power_upper(int n, int p, int q, double b, double alpha);

// 4 mu^{-1/(b^2 log4)}: Hoeffding bound on P(|UV| >= (log mu / log 2) sqrt(pq) / b^2).
// Throws DomainError unless mu > 1 and b > 0.
double hoeffding_tail_bound(int p, int q, double b, double mu);

// The |UV| threshold that hoeffding_tail_bound(p, q, b, mu) controls.
double hoeffding_threshold(int p, int q, double b, double mu);

}  // namespace lintest
