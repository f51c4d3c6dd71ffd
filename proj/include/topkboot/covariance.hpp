#pragma once

#include <Eigen/Dense>

#include "topkboot/rng.hpp"

namespace topkboot {

enum class CovKind { identity, equicorrelated, ar1, explicit_matrix };

// A p x p positive semidefinite covariance with a cached factor L such
// that L L' reproduces the matrix, plus the ascending eigenvalue spectrum.
// Rank-deficient matrices are repaired by flooring the spectrum at
// 1e-12 * trace/p before factorization, which only perturbs null
// directions.
class CovarianceModel {
 public:
  static CovarianceModel identity(int p);
  static CovarianceModel equicorrelated(int p, double rho);
  static CovarianceModel ar1(int p, double rho);
  static CovarianceModel from_matrix(Eigen::MatrixXd sigma);

  CovKind kind() const noexcept { return kind_; }
  int dim() const noexcept { return static_cast<int>(sigma_.rows()); }
  double param() const noexcept { return rho_; }
  const Eigen::MatrixXd& matrix() const noexcept { return sigma_; }
  const Eigen::MatrixXd& factor() const noexcept { return factor_; }
  const Eigen::VectorXd& spectrum() const noexcept { return spectrum_; }
  bool is_identity() const noexcept { return kind_ == CovKind::identity; }

  // One draw of N(0, Sigma) from the given stream (p normals + factor).
  Eigen::VectorXd sample(RngStream& stream) const;

 private:
  CovarianceModel() = default;
  void factorize();

  CovKind kind_ = CovKind::identity;
  double rho_ = 0.0;
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd factor_;
  Eigen::VectorXd spectrum_;  // ascending; fixed at construction
};

// Factor for an arbitrary PSD matrix with the same flooring repair as
// CovarianceModel; used for plug-in empirical covariances.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& sigma);

}  // namespace topkboot
