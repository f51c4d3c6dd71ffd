#include "topkboot/covariance.hpp"

#include <cmath>
#include <string>

#include "topkboot/errors.hpp"

namespace topkboot {

namespace {

void check_dim(int p) {
  if (p < 1) throw domain_error("covariance dimension must be >= 1");
}

}  // namespace

CovarianceModel CovarianceModel::identity(int p) {
  check_dim(p);
  CovarianceModel m;
  m.kind_ = CovKind::identity;
  m.sigma_ = Eigen::MatrixXd::Identity(p, p);
  m.factor_ = Eigen::MatrixXd::Identity(p, p);
  m.spectrum_ = Eigen::VectorXd::Ones(p);
  return m;
}

CovarianceModel CovarianceModel::equicorrelated(int p, double rho) {
  check_dim(p);
  // PSD iff rho in [-1/(p-1), 1].
  const double lo = p > 1 ? -1.0 / (p - 1) : -1.0;
  if (!(rho >= lo && rho <= 1.0)) {
    throw domain_error("equicorrelated rho outside PSD range [" +
                       std::to_string(lo) + ", 1]");
  }
  CovarianceModel m;
  m.kind_ = CovKind::equicorrelated;
  m.rho_ = rho;
  m.sigma_ = Eigen::MatrixXd::Constant(p, p, rho);
  m.sigma_.diagonal().setOnes();
  m.factorize();
  // Spectrum in closed form: 1 - rho with multiplicity p-1, 1 + (p-1) rho.
  m.spectrum_ = Eigen::VectorXd::Constant(p, 1.0 - rho);
  const double top = 1.0 + (p - 1) * rho;
  if (rho >= 0.0) {
    m.spectrum_[p - 1] = top;
  } else {
    m.spectrum_[0] = top;
  }
  return m;
}

CovarianceModel CovarianceModel::ar1(int p, double rho) {
  check_dim(p);
  if (!(rho > -1.0 && rho < 1.0)) {
    throw domain_error("ar1 rho must lie in (-1, 1)");
  }
  CovarianceModel m;
  m.kind_ = CovKind::ar1;
  m.rho_ = rho;
  m.sigma_.resize(p, p);
  for (int j = 0; j < p; ++j) {
    for (int k = 0; k < p; ++k) {
      m.sigma_(j, k) = std::pow(rho, std::abs(j - k));
    }
  }
  m.factorize();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.sigma_);
  m.spectrum_ = es.eigenvalues();
  return m;
}

CovarianceModel CovarianceModel::from_matrix(Eigen::MatrixXd sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() < 1) {
    throw domain_error("explicit covariance must be square and nonempty");
  }
  const double scale = sigma.cwiseAbs().maxCoeff();
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() >
      1e-10 * std::max(scale, 1.0)) {
    throw domain_error("explicit covariance must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  if (es.eigenvalues().minCoeff() < -1e-10 * std::max(scale, 1.0)) {
    throw domain_error("explicit covariance must be positive semidefinite; "
                       "smallest eigenvalue " +
                       std::to_string(es.eigenvalues().minCoeff()));
  }
  CovarianceModel m;
  m.kind_ = CovKind::explicit_matrix;
  m.sigma_ = std::move(sigma);
  m.spectrum_ = es.eigenvalues();
  m.factorize();
  return m;
}

void CovarianceModel::factorize() { factor_ = psd_factor(sigma_); }

Eigen::VectorXd CovarianceModel::sample(RngStream& stream) const {
  const int p = dim();
  Eigen::VectorXd g(p);
  for (int j = 0; j < p; ++j) g[j] = stream.next_normal();
  if (is_identity()) return g;
  return factor_ * g;
}

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& sigma) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() == Eigen::Success) {
    return llt.matrixL();
  }
  // Semi-definite or numerically indefinite: floor the spectrum and build
  // the factor from the eigendecomposition.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  const double floor =
      1e-12 * std::max(sigma.trace() / sigma.rows(), 1e-300);
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
}

}  // namespace topkboot
