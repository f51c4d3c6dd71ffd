#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "topkboot/bootstrap.hpp"
#include "topkboot/randgen.hpp"
#include "topkboot/smooth_topk.hpp"

namespace topkboot {

// Monte Carlo decay experiments: two-sample Kolmogorov distances between a
// statistic of the rescaled sum and the same statistic of its Gaussian
// analog, across a ladder of sample sizes (or dimensions).

enum class GaussianSide { population, plugin };

struct DecayExperimentSpec {
  GeneratorSpec generator;
  std::vector<int> n_ladder;
  std::vector<int> p_ladder;  // diverging-kappa runs only
  KappaSpec kappa = KappaSpec::fixed(1);
  int d = 0;                  // square-sum order (rho_d runs)
  int mc_reps = 1000;
  std::uint64_t seed = 1;
  GaussianSide side = GaussianSide::population;
  double beta = 0.0;          // 0 = (ln p) * n^{1/8}
  double C2 = 1.0;            // regime-condition knobs
  double c2 = 0.0;
  int threads = 0;
};

struct CellResult {
  int n = 0;
  int p = 0;
  int kappa_or_d = 0;
  double estimate = 0.0;   // two-sample KS
  double mc_se = 0.0;
  double regime_lhs = 0.0; // left side of the labeled growth condition
  bool regime_ok = false;
  std::string regime_label;
  std::uint64_t cell_seed = 0;
};

struct ExperimentReport {
  std::string kind;
  std::vector<CellResult> cells;
  double noise_floor = 0.0;  // 1.36 sqrt(2/mc_reps)
};

// Default smoothing level for experiment configs.
double default_beta(int p, int n);

// Per-cell two-sample KS SE used by ladder-monotonicity checks.
double ks_cell_se(double estimate, int mc_reps);

ExperimentReport rho_kappa_experiment(const DecayExperimentSpec& spec);
ExperimentReport rho_d_square_experiment(const DecayExperimentSpec& spec);
ExperimentReport diverging_kappa_experiment(const DecayExperimentSpec& spec);

struct FunctionalComparisonReport {
  std::string g_label;
  double beta = 0.0;
  double u = 0.0;
  double gamma = 0.0;
  double mean_x = 0.0;       // E g(F_k(X)) estimate
  double mean_y = 0.0;       // E g(F_k(Y)) estimate
  double abs_diff = 0.0;
  double mc_se = 0.0;        // SE of the difference of means
  double D_n = 0.0;          // rate functional, unknown constant left out
  double ratio = 0.0;        // abs_diff / D_n
  bool gate_ok = true;       // 2 sqrt(2) u M2 beta / sqrt(n) <= 1
  double gate_value = 0.0;
  // Square-sum analog (the same comparison applied to squared coordinates):
  double square_abs_diff = 0.0;
  double square_mc_se = 0.0;
  double D_hat_n = 0.0;
  double K2_hat = 0.0;
};

// Smooth expectation comparison |E g(F_k(X)) - E g(F_k(Y))| with the
// rate functional D_n(g, beta, u, gamma) computed from sample moment
// estimates; runs out-of-regime inputs but flags them.
FunctionalComparisonReport functional_comparison(const DecayExperimentSpec& spec,
                                                 const TestFunctional& g,
                                                 double beta, double u,
                                                 double gamma);

// Regime bookkeeping: left-hand side of the (S.x) growth conditions.
double regime_lhs_fixed(const GeneratorSpec& gen, int n);
double regime_lhs_diverging(const GeneratorSpec& gen, int n, double lambda_exp);
double regime_lhs_square(const GeneratorSpec& gen, int n, int d, double b_exp);

}  // namespace topkboot
