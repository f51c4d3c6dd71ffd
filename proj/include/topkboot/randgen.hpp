#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "topkboot/covariance.hpp"
#include "topkboot/rng.hpp"

namespace topkboot {

// An n x p observation block. Rows are observations; entries are finite.
class SampleMatrix {
 public:
  static SampleMatrix from_matrix(Eigen::MatrixXd data);

  int n() const noexcept { return static_cast<int>(data_.rows()); }
  int p() const noexcept { return static_cast<int>(data_.cols()); }
  const Eigen::MatrixXd& data() const noexcept { return data_; }

  void to_csv(const std::string& path) const;
  static SampleMatrix from_csv(const std::string& path);

 private:
  explicit SampleMatrix(Eigen::MatrixXd d) : data_(std::move(d)) {}
  Eigen::MatrixXd data_;
};

enum class Family {
  gaussian,
  rademacher,
  uniform,
  centered_exponential,
  student_t,
  bounded_scaled,
};

Family family_from_string(const std::string& name);
std::string family_to_string(Family f);

// Moment-envelope regime the family satisfies (see the experiment
// bookkeeping): E1 pairs a sub-exponential envelope B_n with second/third
// moment growth, E2 only restricts fourth moments of the row maximum.
enum class MomentRegime { e1, e2 };

struct GeneratorSpec {
  Family family = Family::gaussian;
  CovarianceModel covariance = CovarianceModel::identity(3);
  std::uint64_t seed = 1;
  double student_df = 8.0;   // integer > 4; standardized to unit variance
  double bound = 0.0;        // bounded_scaled envelope B_n; 0 = (ln p)^2

  double envelope_bn() const;       // the B_n used in regime bookkeeping
  MomentRegime regime() const;
  // Tail-decay order for sub-Weibull bookkeeping (2 = sub-Gaussian,
  // 1 = sub-exponential). Heavy-tail families report their nominal value.
  double varsigma() const;
};

// i.i.d. rows with the requested covariance: standardized independent scalars
// mixed through the covariance factor. Deterministic given (seed, rep).
SampleMatrix sample_data(const GeneratorSpec& spec, int n);
SampleMatrix sample_data_rep(const GeneratorSpec& spec, int n,
                             std::uint64_t rep);

// X_j = n^{-1/2} sum_i x_ij.
Eigen::VectorXd rescaled_sum(const SampleMatrix& m);

// Draws from N(0, Sigma_hat) with the plug-in Sigma_hat = (1/n) X'X.
std::vector<Eigen::VectorXd> gaussian_analog(const SampleMatrix& m, int reps,
                                             std::uint64_t seed);

Eigen::MatrixXd empirical_second_moment(const SampleMatrix& m);

// Column-wise truncation at u * rms_j with empirical recentering.
Eigen::MatrixXd truncated_matrix(const SampleMatrix& m, double u);

struct MomentSummary {
  double M2 = 0.0;
  double M3 = 0.0;
  double M4 = 0.0;
  std::map<double, double> phi_of_u;    // truncation impact per threshold
  std::map<double, double> u_of_gamma;  // envelope quantile per level
  double delta = 0.0;                   // max |empirical - reference| 2nd moment
  bool has_delta = false;
  bool degenerate = false;              // some column has zero second moment
  std::string note;
};

struct MomentSummaryOptions {
  int resample_replicates = 200;
  std::uint64_t seed = 1;
};

MomentSummary moment_summary(
    const SampleMatrix& m, const std::vector<double>& u_grid,
    const std::vector<double>& gamma_grid,
    const std::optional<Eigen::MatrixXd>& reference_cov = std::nullopt,
    const MomentSummaryOptions& opts = {});

struct OrliczModulus {
  enum class Kind { power, exponential } kind = Kind::power;
  double q = 2.0;  // power exponent (power kind only)
  double B = 1.0;
  double D = 1.0;

  static OrliczModulus power(double q, double B, double D);
  static OrliczModulus exponential(double B, double D);
  double h_inverse(double t) const;
};

// Rate shape max{ D h^{-1}(n/gamma), B sqrt(ln(p n / gamma)) } of the
// envelope bound; the universal constant is fixed to one.
double u_bound_shape(const OrliczModulus& mod, int n, int p, double gamma);

struct SubWeibullProbe {
  double varsigma = 2.0;
  double K2_hat = 0.0;
  std::vector<double> per_q;  // (mean |xi|^q)^{1/q} / q^{1/varsigma}
};

// Fits the moment-growth constant sup_q (E|xi|^q)^{1/q} / q^{1/varsigma}
// over integer q up to q_max. Requires count >= 100 * 2^{q_max} so the
// top moments are stable.
SubWeibullProbe subweibull_probe(const std::vector<double>& samples,
                                 double varsigma, int q_max);

}  // namespace topkboot
