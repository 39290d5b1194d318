#pragma once

#include <Eigen/Dense>
#include <optional>

#include "lintest/rng.hpp"

namespace lintest {

// One member of the least-favorable family
//   Sigma_uv = I_{p+q} + a (u v' + v u'),
// where u lives on the X block and v on the Y block. Only the nonzero sign
// blocks are stored.
class LeastFavorableCov {
 public:
  // Throws DomainError unless every sign is exactly +-1 and a is finite and >= 0.
  LeastFavorableCov(Eigen::VectorXd u, Eigen::VectorXd v, double a);

  const Eigen::VectorXd& u() const { return u_; }
  const Eigen::VectorXd& v() const { return v_; }
  double a() const { return a_; }
  int p() const { return static_cast<int>(u_.size()); }
  int q() const { return static_cast<int>(v_.size()); }
  int dim() const { return p() + q(); }

  // a^2 p q, the quantity that must stay below 1.
  double load() const;
  bool positive_definite() const { return load() < 1.0; }

  // ||Sigma_XY||_F = a sqrt(pq).
  double cross_frobenius() const;

 private:
  Eigen::VectorXd u_;
  Eigen::VectorXd v_;
  double a_;
};

// n samples of z = (x, y); row i is (x_i', y_i').
struct Dataset {
  Eigen::MatrixXd values;
  int p = 0;
  int q = 0;
  std::optional<LeastFavorableCov> cov;  // generator, when it was a family member

  int rows() const { return static_cast<int>(values.rows()); }
  auto x() const { return values.leftCols(p); }
  auto y() const { return values.rightCols(q); }
};

// a = b / (sqrt(2n) (pq)^{1/4}). b may be 0; n, p, q must be positive.
double amplitude(int n, int p, int q, double b);

// Uniform draw over the 2^{p+q} sign patterns, paired with amplitude a.
LeastFavorableCov sample_direction(int p, int q, double a, Rng& rng);

// Throws SingularCovariance when a^2 pq >= 1.
Eigen::MatrixXd dense_cov(const LeastFavorableCov& lf);

// Sherman-Morrison closed form. Throws SingularCovariance when a^2 pq >= 1.
Eigen::MatrixXd cov_inverse(const LeastFavorableCov& lf);

// 1 - pq a^2 (may be <= 0 outside the positive definite range).
double cov_det(const LeastFavorableCov& lf);

// Sigma^{1/2} z using the two nontrivial eigenpairs
//   lambda_{+-} = 1 +- a sqrt(pq),  w_{+-} = (u / sqrt(2p)) (+) (+-v / sqrt(2q)).
// O(p + q). Throws SingularCovariance when lambda_- <= 0.
Eigen::VectorXd cov_sqrt_apply(const LeastFavorableCov& lf,
                               const Eigen::Ref<const Eigen::VectorXd>& z);

// In-place version for every row of a sample matrix.
void cov_sqrt_apply_rows(const LeastFavorableCov& lf, Eigen::Ref<Eigen::MatrixXd> rows);

// n i.i.d. rows from N(0, Sigma_uv).
Dataset sample_dataset(const LeastFavorableCov& lf, int n, Rng& rng);

// n i.i.d. rows from N(0, I_{p+q}).
Dataset sample_null_dataset(int n, int p, int q, Rng& rng);

// Fills a matrix with i.i.d. standard normals, row by row.
void fill_standard_normal(Eigen::Ref<Eigen::MatrixXd> m, Rng& rng);

// Generic dense routines kept as the reference path for the closed forms above.
namespace verify {

Eigen::MatrixXd dense_inverse(const Eigen::MatrixXd& m);
double dense_determinant(const Eigen::MatrixXd& m);
// Symmetric PSD square root via eigendecomposition (negative eigenvalues clamped to 0).
Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m);
double min_eigenvalue(const Eigen::MatrixXd& m);

}  // namespace verify

}  // namespace lintest
