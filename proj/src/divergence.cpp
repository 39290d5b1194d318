#include "lintest/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "lintest/errors.hpp"
#include "lintest/structured_cov.hpp"

namespace lintest {

namespace {

const double kLog4 = 2.0 * std::numbers::ln2;

void require_dims(int p, int q) {
  if (p < 1 || q < 1) throw DomainError("p and q must be >= 1");
}

// log C(m, k) - m log 2: probability that a sum of m signs equals m - 2k.
double log_sign_sum_weight(int m, int k) {
  return std::lgamma(m + 1.0) - std::lgamma(k + 1.0) - std::lgamma(m - k + 1.0) -
         m * std::numbers::ln2;
}

// log[(1 - x)^{-n} + (1 + x)^{-n} - 2] for 0 < x < 1. Both pieces are
// combined before subtracting 2 so small x keeps full relative precision.
double log_paired_excess(int n, double x) {
  const double hi = -n * std::log1p(-x);  // >= |lo|
  const double lo = -n * std::log1p(x);
  if (hi < 30.0) {
    const double mean = -0.5 * n * std::log1p(-x * x);
    const double half_gap = n * std::atanh(x);
    const double s = std::sinh(0.5 * half_gap);
    return std::log(2.0 * (std::expm1(mean) * std::cosh(half_gap) + 2.0 * s * s));
  }
  return hi + std::log1p(std::exp(lo - hi) - 2.0 * std::exp(-hi));
}

}  // namespace

double GammaQuad::mgf_product() const {
  double prod = 1.0;
  for (double g : gammas) prod *= 1.0 - t * g;
  return prod;
}

double GammaQuad::mgf_product_target() const {
  const double ratio = (1.0 - a * a * ug * static_cast<double>(vh)) /
                       (1.0 - a * a * p * static_cast<double>(q));
  return ratio * ratio;
}

GammaQuad gamma_eigs(double a, int p, int q, int ug, int vh) {
  require_dims(p, q);
  if (std::abs(ug) > p || (ug + p) % 2 != 0) throw DomainError("gamma_eigs: ug must be in {-p, -p+2, ..., p}");
  if (std::abs(vh) > q || (vh + q) % 2 != 0) throw DomainError("gamma_eigs: vh must be in {-q, -q+2, ..., q}");
  const double pq = static_cast<double>(p) * q;
  if (!(a >= 0.0) || a * a * pq >= 1.0) throw SingularCovariance("gamma_eigs: a^2 pq >= 1");

  GammaQuad out;
  out.a = a;
  out.p = p;
  out.q = q;
  out.ug = ug;
  out.vh = vh;
  out.t = a / (1.0 - pq * a * a);
  const double dug = ug;
  const double dvh = vh;
  for (int i = 0; i < 2; ++i) {
    const double s = i == 0 ? 1.0 : -1.0;
    // Factored discriminant; each product term is >= 0 on the admissible lattice.
    const double skew = q * dug - p * dvh;
    const double disc = a * a * skew * skew + 4.0 * (p - s * dug) * (q - s * dvh);
    if (disc < 0.0) {
      std::ostringstream os;
      os << "gamma_eigs: discriminant " << disc << " < 0 at (p,q,ug,vh)=(" << p << "," << q
         << "," << ug << "," << vh << ")";
      throw NegativeDiscriminant(os.str());
    }
    const double root = std::sqrt(disc);
    const double centre = -2.0 * a * pq + s * a * q * dug + s * a * p * dvh;
    out.gammas[2 * i + 0] = 0.5 * (centre - root);
    out.gammas[2 * i + 1] = 0.5 * (centre + root);
  }
  return out;
}

bool mgf_validity(double a, int p, int q) {
  require_dims(p, q);
  if (!(a >= 0.0)) return false;
  if (a * a * static_cast<double>(p) * q >= 1.0) return false;
  if (a == 0.0) return true;
  for (int ug = -p; ug <= p; ug += 2) {
    for (int vh = -q; vh <= q; vh += 2) {
      const GammaQuad g = gamma_eigs(a, p, q, ug, vh);
      for (double gamma : g.gammas)
        if (!(g.t * gamma < 1.0)) return false;
    }
  }
  return true;
}

double chi_square_exact(int n, int p, int q, double b) {
  const double a = amplitude(n, p, q, b);
  if (a == 0.0) return 0.0;
  const double a2 = a * a;
  if (a2 * p * static_cast<double>(q) >= 1.0) {
    std::ostringstream os;
    os << "chi_square_exact: 1 - a^2 UV <= 0 at U=p, V=q (a^2 pq = " << a2 * p * q << ")";
    throw DivergenceInfinite(os.str());
  }
  if (!mgf_validity(a, p, q)) throw DivergenceInfinite("chi_square_exact: t gamma >= 1, MGF infinite");

  // (U,V) and (U,-V) share a weight; so do (U,V) and (-U,-V). Folding both
  // leaves U, V > 0 with nonnegative summands and an overall factor 2.
  std::vector<double> log_terms;
  log_terms.reserve(static_cast<std::size_t>((p + 1) / 2) * ((q + 1) / 2));
  for (int k = 0; 2 * k < p; ++k) {
    const int u = p - 2 * k;
    const double lw_u = log_sign_sum_weight(p, k);
    for (int l = 0; 2 * l < q; ++l) {
      const int v = q - 2 * l;
      const double x = a2 * u * static_cast<double>(v);
      log_terms.push_back(std::numbers::ln2 + lw_u + log_sign_sum_weight(q, l) +
                          log_paired_excess(n, x));
    }
  }
  if (log_terms.empty()) return 0.0;

  std::sort(log_terms.begin(), log_terms.end());
  const double top = log_terms.back();
  if (!std::isfinite(top)) return top > 0 ? top : 0.0;
  double sum = 0.0;
  for (double lt : log_terms) sum += std::exp(lt - top);
  return std::exp(top + std::log(sum));
}

double chi_square_closed_bound(double b) {
  const double cap = 1.0 / std::sqrt(kLog4);
  if (!(b >= 0.0 && b < cap)) {
    std::ostringstream os;
    os << "chi_square_closed_bound: b = " << b << " outside [0, 1/sqrt(log 4))";
    throw DomainError(os.str());
  }
  const double x = b * b * kLog4;
  return 4.0 * x / (1.0 - x);
}

double select_b(double kappa, double alpha, double beta) {
  if (!(alpha > 0.0 && alpha < beta && beta < 1.0)) throw DomainError("select_b: need 0 < alpha < beta < 1");
  if (!(kappa > 0.0)) throw DomainError("select_b: kappa must be > 0");
  const double gap = beta - alpha;
  const double power_choice = gap / (std::sqrt(kLog4) * (1.0 + gap));
  const double mgf_cap = (1.0 - select_b_margin) / (2.0 * std::sqrt(kappa));
  return std::min(power_choice, mgf_cap);
}

ValidityFlags validity_flags(int n, int p, int q, double b) {
  const double a = amplitude(n, p, q, b);
  ValidityFlags f;
  f.pd_ok = a * a * static_cast<double>(p) * q < 1.0;
  f.mgf_ok = f.pd_ok && mgf_validity(a, p, q);
  const double aspect = static_cast<double>(p + q) / n;
  f.b_caps_ok = b < 1.0 / std::sqrt(kLog4) && b < 1.0 / (2.0 * std::sqrt(aspect));
  return f;
}

DivergenceReport minimax_power_upper(int n, int p, int q, double b, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("minimax_power_upper: alpha must lie in (0,1)");
  DivergenceReport r;
  r.validity = validity_flags(n, p, q, b);
  r.chi2_exact = chi_square_exact(n, p, q, b);
  r.chi2_closed_bound = b < 1.0 / std::sqrt(kLog4) ? chi_square_closed_bound(b)
                                                  : std::numeric_limits<double>::infinity();
  r.tv_upper = 0.5 * std::sqrt(r.chi2_exact);
  r.power_upper = alpha + r.tv_upper;
  return r;
}

double hoeffding_tail_bound(int p, int q, double b, double mu) {
  require_dims(p, q);
  if (!(mu > 1.0)) throw DomainError("hoeffding_tail_bound: mu must be > 1");
  if (!(b > 0.0)) throw DomainError("hoeffding_tail_bound: b must be > 0");
  return 4.0 * std::exp(-std::log(mu) / (b * b * kLog4));
}

double hoeffding_threshold(int p, int q, double b, double mu) {
  require_dims(p, q);
  if (!(mu > 1.0) || !(b > 0.0)) throw DomainError("hoeffding_threshold: need mu > 1 and b > 0");
  return std::log(mu) / std::numbers::ln2 * std::sqrt(static_cast<double>(p) * q) / (b * b);
}

}  // namespace lintest
