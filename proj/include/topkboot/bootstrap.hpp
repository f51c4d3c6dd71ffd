#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "topkboot/covariance.hpp"
#include "topkboot/randgen.hpp"

namespace topkboot {

// Fixed-or-diverging order index for the k-th largest coordinate.
struct KappaSpec {
  enum class Mode { fixed, diverging } mode = Mode::fixed;
  int kappa = 1;            // fixed mode
  double Lambda = 1.0;      // diverging: kappa/p <= Lambda p^{-lambda}
  double lambda_exp = 0.0;  // in [0, 1)

  static KappaSpec fixed(int kappa);
  static KappaSpec diverging(double Lambda, double lambda_exp);

  // Resolves the index for dimension p, clamped to floor((p+1)/2).
  int kappa_for(int p) const;
};

// Multiplier replicates of the k-th largest coordinate: for each replicate,
// fresh i.i.d. standard normal multipliers e_i hit the fixed data matrix and
// the k-th largest of {sum_i x_ij e_i / sqrt(n)} is recorded.
struct BootstrapRun {
  int replicate_count = 0;
  std::vector<double> values;
  int kappa = 1;
  std::uint64_t seed = 0;
};

BootstrapRun multiplier_replicates(const SampleMatrix& m, const KappaSpec& kappa,
                                   int B, std::uint64_t seed);

struct QuantileEstimate {
  double alpha = 0.0;
  double value = 0.0;
  enum class Side { conditional_bootstrap, gaussian_analog } side =
      Side::conditional_bootstrap;
};

// ceil(alpha B)-th order statistic: the inf-definition quantile of the
// empirical conditional law. alpha must lie in (0,1).
QuantileEstimate conditional_quantile(const BootstrapRun& run, double alpha);

// Internal convention for shifted levels: alpha in (0,1] maps to the
// ceil(alpha B)-th order statistic, alpha > 1 to +infinity (inf of an
// empty set), alpha <= 0 to -infinity.
double empirical_quantile_extended(const std::vector<double>& sorted,
                                   double alpha);

// Monte Carlo quantile of the k-th largest coordinate of N(0, Sigma).
QuantileEstimate gaussian_quantile(const CovarianceModel& model,
                                   const KappaSpec& kappa, double alpha,
                                   int reps, std::uint64_t seed);
// Plug-in variant with Sigma_hat = (1/n) X'X from the data.
QuantileEstimate gaussian_quantile(const SampleMatrix& m, const KappaSpec& kappa,
                                   double alpha, int reps, std::uint64_t seed);

struct QuantileGapTolerance {
  double vartheta = 0.0;
  double nu_value = 0.0;
  double constant_C2 = 1.0;
  bool diverging = false;
};

// nu_k(theta) (fixed) or nu~_k(theta) (diverging), with the theory-level
// unquantified constant exposed as the C2 knob.
QuantileGapTolerance quantile_gap_tolerance(double vartheta, int p,
                                            const KappaSpec& kappa,
                                            double C2 = 1.0);

// Wrapper statistics approximating the exact k-th largest of an average:
// identity passes through, additive_shift moves T and every replicate by
// +zeta1, additive_noise adds independent Uniform(-zeta1, zeta1) noise to
// T and to each replicate (so the approximation conditions hold surely).
struct ApproxStatSpec {
  double zeta1 = 0.0;
  double zeta2 = 0.0;
  enum class Transform { identity, additive_shift, additive_noise } transform =
      Transform::identity;

  static ApproxStatSpec identity();
  static ApproxStatSpec additive_shift(double zeta1, double zeta2);
  static ApproxStatSpec additive_noise(double zeta1, double zeta2);
};

struct CoverageOptions {
  int gaussian_reps = 100000;  // draws behind the analog-quantile events
  double C2 = 1.0;
  double C3 = 1.0;             // approximate-statistic penalty constant
  double delta_quantile = 0.95;  // theta = this quantile of observed Delta
  int threads = 0;
};

struct CoverageCell {
  double alpha = 0.0;
  double coverage = 0.0;        // P(T <= c_W(alpha))
  double coverage_error = 0.0;  // |coverage - alpha|
  double binom_se = 0.0;
  double symdiff = 0.0;         // P(event_W differs from event_Z)
};

struct CoverageReport {
  int n = 0;
  int p = 0;
  int kappa = 0;
  int mc_reps = 0;
  int replicate_count = 0;
  std::uint64_t seed = 0;
  std::vector<CoverageCell> cells;
  double rho_ominus = 0.0;      // max symdiff across the alpha grid
  // Quantile-comparison diagnostics (conditional vs analog):
  double delta_theta = 0.0;     // chosen theta (upper quantile of Delta)
  double nu_at_theta = 0.0;
  double ordering_fraction = 0.0;  // freq of c_W(a) <= c_Z(a + nu)
  // Approximate-statistic diagnostics (identity transform: trivially 1):
  double ap_ordering_fraction = 1.0;
  bool ap1_ok = true;
  bool ap2_ok = true;
  // C3 k zeta1 sqrt(1 v ln(p/zeta1)) + 5 zeta2: the extra error budget the
  // approximate-statistic bound adds on top of the exact-statistic terms.
  double approx_penalty = 0.0;
  std::string transform = "identity";
};

CoverageReport coverage_experiment(const GeneratorSpec& gen, int n,
                                   const KappaSpec& kappa,
                                   const std::vector<double>& alpha_list,
                                   int mc_reps, int B, std::uint64_t seed,
                                   const CoverageOptions& opts = {});

CoverageReport approx_stat_experiment(const ApproxStatSpec& spec,
                                      const GeneratorSpec& gen, int n,
                                      const KappaSpec& kappa,
                                      const std::vector<double>& alpha_list,
                                      int mc_reps, int B, std::uint64_t seed,
                                      const CoverageOptions& opts = {});

}  // namespace topkboot
