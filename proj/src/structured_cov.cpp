#include "lintest/structured_cov.hpp"

#include <cmath>
#include <sstream>

#include "lintest/errors.hpp"

namespace lintest {

namespace {

void require_signs(const Eigen::VectorXd& s, const char* name) {
  if (s.size() < 1) throw DomainError(std::string(name) + " must have length >= 1");
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] != 1.0 && s[i] != -1.0) {
      std::ostringstream os;
      os << name << "[" << i << "] = " << s[i] << " is not +-1";
      throw DomainError(os.str());
    }
  }
}

void require_pd(const LeastFavorableCov& lf) {
  if (!lf.positive_definite()) {
    std::ostringstream os;
    os << "a^2 pq = " << lf.load() << " >= 1; covariance is not positive definite";
    throw SingularCovariance(os.str());
  }
}

// sqrt(1 + x) - 1 without cancellation for small x.
double sqrt1pm1(double x) { return x / (std::sqrt(1.0 + x) + 1.0); }

}  // namespace

LeastFavorableCov::LeastFavorableCov(Eigen::VectorXd u, Eigen::VectorXd v, double a)
    : u_(std::move(u)), v_(std::move(v)), a_(a) {
  require_signs(u_, "u");
  require_signs(v_, "v");
  if (!(std::isfinite(a_) && a_ >= 0.0)) throw DomainError("amplitude must be finite and >= 0");
}

double LeastFavorableCov::load() const {
  return a_ * a_ * static_cast<double>(p()) * static_cast<double>(q());
}

double LeastFavorableCov::cross_frobenius() const {
  return a_ * std::sqrt(static_cast<double>(p()) * static_cast<double>(q()));
}

double amplitude(int n, int p, int q, double b) {
  if (n < 1 || p < 1 || q < 1) throw DomainError("amplitude: n, p, q must be positive");
  if (!(std::isfinite(b) && b >= 0.0)) throw DomainError("amplitude: b must be finite and >= 0");
  const double pq = static_cast<double>(p) * static_cast<double>(q);
  return b / (std::sqrt(2.0 * n) * std::sqrt(std::sqrt(pq)));
}

LeastFavorableCov sample_direction(int p, int q, double a, Rng& rng) {
  if (p < 1 || q < 1) throw DomainError("sample_direction: p, q must be positive");
  std::bernoulli_distribution coin(0.5);
  Eigen::VectorXd u(p), v(q);
  for (int i = 0; i < p; ++i) u[i] = coin(rng) ? 1.0 : -1.0;
  for (int j = 0; j < q; ++j) v[j] = coin(rng) ? 1.0 : -1.0;
  return LeastFavorableCov(std::move(u), std::move(v), a);
}

Eigen::MatrixXd dense_cov(const LeastFavorableCov& lf) {
  require_pd(lf);
  const int p = lf.p();
  const int d = lf.dim();
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd cross = lf.a() * lf.u() * lf.v().transpose();
  m.block(0, p, p, lf.q()) = cross;
  m.block(p, 0, lf.q(), p) = cross.transpose();
  return m;
}

Eigen::MatrixXd cov_inverse(const LeastFavorableCov& lf) {
  require_pd(lf);
  const int p = lf.p();
  const int q = lf.q();
  const double a = lf.a();
  const double denom = 1.0 - lf.load();
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(p + q, p + q);
  m.topLeftCorner(p, p) += (a * a * q / denom) * lf.u() * lf.u().transpose();
  m.bottomRightCorner(q, q) += (a * a * p / denom) * lf.v() * lf.v().transpose();
  const Eigen::MatrixXd cross = (-a / denom) * lf.u() * lf.v().transpose();
  m.block(0, p, p, q) = cross;
  m.block(p, 0, q, p) = cross.transpose();
  return m;
}

double cov_det(const LeastFavorableCov& lf) { return 1.0 - lf.load(); }

void cov_sqrt_apply_rows(const LeastFavorableCov& lf, Eigen::Ref<Eigen::MatrixXd> rows) {
  require_pd(lf);
  const int p = lf.p();
  const int q = lf.q();
  if (rows.cols() != p + q) throw DomainError("cov_sqrt_apply: dimension mismatch");
  const double r = lf.cross_frobenius();
  const double k_plus = sqrt1pm1(r);
  const double k_minus = sqrt1pm1(-r);
  const double sp = 1.0 / std::sqrt(2.0 * p);
  const double sq = 1.0 / std::sqrt(2.0 * q);

  const Eigen::VectorXd sx = sp * (rows.leftCols(p) * lf.u());
  const Eigen::VectorXd sy = sq * (rows.rightCols(q) * lf.v());
  const Eigen::VectorXd c_plus = k_plus * (sx + sy);
  const Eigen::VectorXd c_minus = k_minus * (sx - sy);
  rows.leftCols(p).noalias() += (sp * (c_plus + c_minus)) * lf.u().transpose();
  rows.rightCols(q).noalias() += (sq * (c_plus - c_minus)) * lf.v().transpose();
}

Eigen::VectorXd cov_sqrt_apply(const LeastFavorableCov& lf,
                               const Eigen::Ref<const Eigen::VectorXd>& z) {
  if (z.size() != lf.dim()) throw DomainError("cov_sqrt_apply: dimension mismatch");
  Eigen::MatrixXd row = z.transpose();
  cov_sqrt_apply_rows(lf, row);
  return row.transpose();
}

void fill_standard_normal(Eigen::Ref<Eigen::MatrixXd> m, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = normal(rng);
}

Dataset sample_dataset(const LeastFavorableCov& lf, int n, Rng& rng) {
  if (n < 1) throw DomainError("sample_dataset: n must be >= 1");
  require_pd(lf);
  Dataset ds;
  ds.p = lf.p();
  ds.q = lf.q();
  ds.values.resize(n, lf.dim());
  fill_standard_normal(ds.values, rng);
  cov_sqrt_apply_rows(lf, ds.values);
  ds.cov = lf;
  return ds;
}

Dataset sample_null_dataset(int n, int p, int q, Rng& rng) {
  if (n < 1 || p < 1 || q < 1) throw DomainError("sample_null_dataset: n, p, q must be >= 1");
  Dataset ds;
  ds.p = p;
  ds.q = q;
  ds.values.resize(n, p + q);
  fill_standard_normal(ds.values, rng);
  return ds;
}

namespace verify {

Eigen::MatrixXd dense_inverse(const Eigen::MatrixXd& m) { return m.fullPivLu().inverse(); }

double dense_determinant(const Eigen::MatrixXd& m) { return m.fullPivLu().determinant(); }

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const Eigen::VectorXd roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace verify

}  // namespace lintest
