#include "lintest/oracles.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "lintest/errors.hpp"
#include "lintest/parallel.hpp"
#include "lintest/rng.hpp"
#include "lintest/structured_cov.hpp"

namespace lintest {

namespace {

// Neumaier-compensated running sum.
template <class Real>
struct CompensatedSum {
  Real sum = 0;
  Real carry = 0;
  void add(Real x) {
    const Real t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      carry += (sum - t) + x;
    else
      carry += (x - t) + sum;
    sum = t;
  }
  Real value() const { return sum + carry; }
};

Eigen::VectorXd signs_from_mask(unsigned mask, int len) {
  Eigen::VectorXd s(len);
  for (int i = 0; i < len; ++i) s[i] = (mask >> i) & 1u ? -1.0 : 1.0;
  return s;
}

struct Welford {
  std::int64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }
  void merge(const Welford& o) {
    if (o.count == 0) return;
    const std::int64_t total = count + o.count;
    const double delta = o.mean - mean;
    mean += delta * static_cast<double>(o.count) / static_cast<double>(total);
    m2 += o.m2 + delta * delta * static_cast<double>(count) * static_cast<double>(o.count) /
                     static_cast<double>(total);
    count = total;
  }
};

}  // namespace

OracleReport compare(std::string name, double closed_form, double brute_force, double tolerance,
                     double scale_floor) {
  OracleReport r;
  r.name = std::move(name);
  r.closed_form = closed_form;
  r.brute_force = brute_force;
  r.tolerance = tolerance;
  r.abs_err = std::abs(closed_form - brute_force);
  const double scale = std::max(std::abs(brute_force), scale_floor);
  if (scale == 0.0) {
    r.rel_err = r.abs_err == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    r.pass = r.abs_err <= tolerance;
  } else {
    r.rel_err = r.abs_err / scale;
    r.pass = r.rel_err <= tolerance;
  }
  return r;
}

OracleReport compare_abs(std::string name, double closed_form, double brute_force,
                         double abs_tolerance) {
  OracleReport r = compare(std::move(name), closed_form, brute_force, abs_tolerance);
  r.pass = r.abs_err <= abs_tolerance;
  return r;
}

OracleReport compare_upper_bound(std::string name, double bound, double exact) {
  OracleReport r;
  r.name = std::move(name);
  r.closed_form = bound;
  r.brute_force = exact;
  r.abs_err = std::max(0.0, exact - bound);
  r.rel_err = exact == 0.0 ? r.abs_err : r.abs_err / std::abs(exact);
  r.pass = exact <= bound;
  return r;
}

double enumerate_chi_square(int n, int p, int q, double b) {
  if (p < 1 || q < 1 || n < 1) throw DomainError("enumerate_chi_square: n, p, q must be >= 1");
  if (p + q > 8) throw InfeasibleSize("enumerate_chi_square: p + q must be <= 8");
  const long double a = amplitude(n, p, q, b);
  const long double a2 = a * a;
  const unsigned nx = 1u << p;
  const unsigned ny = 1u << q;

  CompensatedSum<long double> acc;
  for (unsigned u = 0; u < nx; ++u) {
    for (unsigned g = 0; g < nx; ++g) {
      const int ug = p - 2 * std::popcount(u ^ g);
      for (unsigned v = 0; v < ny; ++v) {
        for (unsigned h = 0; h < ny; ++h) {
          const int vh = q - 2 * std::popcount(v ^ h);
          const long double x = a2 * static_cast<long double>(ug) * vh;
          if (!(1.0L - x > 0.0L)) throw DivergenceInfinite("enumerate_chi_square: 1 - a^2 (u'g)(v'h) <= 0");
          acc.add(std::expm1(-static_cast<long double>(n) * std::log1p(-x)));
        }
      }
    }
  }
  const long double count = static_cast<long double>(nx) * nx * ny * ny;
  return static_cast<double>(acc.value() / count);
}

McEstimate mc_chi_square(int n, int p, int q, double b, std::int64_t trials, std::uint64_t seed,
                         int workers) {
  if (p < 1 || q < 1 || n < 1) throw DomainError("mc_chi_square: n, p, q must be >= 1");
  if (p + q > 5 || n > 4) throw InfeasibleSize("mc_chi_square: needs p + q <= 5 and n <= 4");
  if (trials < 2) throw DomainError("mc_chi_square: trials must be >= 2");
  const double a = amplitude(n, p, q, b);
  const int d = p + q;

  // Per member: M = Sigma^{-1} - I and log det Sigma, from the dense path only.
  const unsigned members = 1u << d;
  std::vector<Eigen::MatrixXd> shift(members);
  std::vector<double> log_det(members);
  for (unsigned m = 0; m < members; ++m) {
    const LeastFavorableCov lf(signs_from_mask(m & ((1u << p) - 1u), p),
                               signs_from_mask(m >> p, q), a);
    const Eigen::MatrixXd sigma = dense_cov(lf);
    shift[m] = verify::dense_inverse(sigma) - Eigen::MatrixXd::Identity(d, d);
    log_det[m] = std::log(verify::dense_determinant(sigma));
  }

  constexpr std::int64_t kBlocks = 64;
  std::vector<Welford> blocks(kBlocks);
  parallel_for(kBlocks, workers, [&](std::int64_t blk) {
    const std::int64_t begin = trials * blk / kBlocks;
    const std::int64_t end = trials * (blk + 1) / kBlocks;
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(blk));
    Eigen::MatrixXd z(n, d);
    Welford w;
    for (std::int64_t t = begin; t < end; ++t) {
      fill_standard_normal(z, rng);
      const Eigen::MatrixXd scatter = z.transpose() * z;
      // f1/f0 = 2^{-d} sum_m det_m^{-n/2} exp(-tr(M_m S)/2)
      double ratio = 0.0;
      for (unsigned m = 0; m < members; ++m) {
        const double quad = (shift[m].array() * scatter.array()).sum();
        ratio += std::exp(-0.5 * n * log_det[m] - 0.5 * quad);
      }
      ratio /= static_cast<double>(members);
      w.add(ratio * ratio - 1.0);
    }
    blocks[blk] = w;
  });

  Welford total;
  for (const auto& w : blocks) total.merge(w);
  McEstimate est;
  est.trials = total.count;
  est.estimate = total.mean;
  const double var = total.count > 1 ? total.m2 / static_cast<double>(total.count - 1) : 0.0;
  est.std_error = std::sqrt(var / static_cast<double>(total.count));
  return est;
}

namespace {

Eigen::Matrix4d quad_form_matrix_a(int p, int q, double a) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m(0, 0) = -q * a;
  m(0, 1) = m(1, 0) = 1.0;
  m(1, 1) = -p * a;
  m(2, 2) = -q * a;
  m(2, 3) = m(3, 2) = 1.0;
  m(3, 3) = -p * a;
  return m;
}

// Rows map z to chi = (u'z, v'z, g'z, h'z).
Eigen::MatrixXd chi_map(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                        const Eigen::VectorXd& g, const Eigen::VectorXd& h) {
  const auto p = u.size();
  const auto q = v.size();
  if (g.size() != p || h.size() != q) throw DomainError("chi_map: sign vector lengths differ");
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(4, p + q);
  c.block(0, 0, 1, p) = u.transpose();
  c.block(1, p, 1, q) = v.transpose();
  c.block(2, 0, 1, p) = g.transpose();
  c.block(3, p, 1, q) = h.transpose();
  return c;
}

}  // namespace

std::array<double, 4> gamma_numeric(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                                    const Eigen::VectorXd& g, const Eigen::VectorXd& h,
                                    double a) {
  const Eigen::MatrixXd c = chi_map(u, v, g, h);
  const Eigen::MatrixXd cov = c * c.transpose();
  const Eigen::MatrixXd root = verify::symmetric_sqrt(cov);
  const Eigen::Matrix4d a_mat = quad_form_matrix_a(static_cast<int>(u.size()),
                                                   static_cast<int>(v.size()), a);
  const Eigen::MatrixXd sandwich = root * a_mat * root;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (sandwich + sandwich.transpose()),
                                                    Eigen::EigenvaluesOnly);
  std::array<double, 4> out{};
  for (int i = 0; i < 4; ++i) out[i] = es.eigenvalues()[i];
  std::sort(out.begin(), out.end());
  return out;
}

double quad_form_direct(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                        const Eigen::VectorXd& g, const Eigen::VectorXd& h, double a,
                        const Eigen::VectorXd& z) {
  const auto p = u.size();
  const auto q = v.size();
  auto t = [&](const Eigen::VectorXd& x_dir, const Eigen::VectorXd& y_dir) {
    const double xz = x_dir.dot(z.head(p));
    const double yz = y_dir.dot(z.tail(q));
    return 2.0 * yz * xz - q * a * xz * xz - p * a * yz * yz;
  };
  return t(u, v) + t(g, h);
}

double quad_form_matrix(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                        const Eigen::VectorXd& g, const Eigen::VectorXd& h, double a,
                        const Eigen::VectorXd& z) {
  const Eigen::Vector4d chi = chi_map(u, v, g, h) * z;
  return chi.dot(quad_form_matrix_a(static_cast<int>(u.size()), static_cast<int>(v.size()), a) * chi);
}

double enumerate_uv_tail(int p, int q, double threshold) {
  if (p < 1 || q < 1) throw DomainError("enumerate_uv_tail: p, q must be >= 1");
  if (p > 12 || q > 12) throw InfeasibleSize("enumerate_uv_tail: p, q must be <= 12");
  auto tally = [](int len) {
    std::vector<std::int64_t> counts(len + 1, 0);  // index: number of minus signs
    for (unsigned m = 0; m < (1u << len); ++m) ++counts[std::popcount(m)];
    return counts;
  };
  const auto cu = tally(p);
  const auto cv = tally(q);
  std::int64_t hits = 0;
  for (int k = 0; k <= p; ++k) {
    for (int l = 0; l <= q; ++l) {
      const double uv = std::abs(static_cast<double>(p - 2 * k) * (q - 2 * l));
      if (uv >= threshold) hits += cu[k] * cv[l];
    }
  }
  return static_cast<double>(hits) / std::ldexp(1.0, p + q);
}

double log_bound_function(double x) {
  if (x == 0.0) return std::exp(1.0);
  return std::exp(-std::log1p(-x) / x);
}

}  // namespace lintest
