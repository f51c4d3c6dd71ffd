#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace topkboot {

// Entropic smoothing of top-k order statistics.
//
// smooth_top_k_sum(x, s, beta) maximizes  x'u - (1/beta) r(u)  over the
// capped simplex {u in [0,1]^p : sum u = s}, where r is the double-sided
// entropy  sum_j [u_j ln u_j + (1-u_j) ln(1-u_j)] + R_{p,s}.  The optimum
// has sigmoid weights v_j = 1 / (1 + exp(beta (alpha - x_j))) with a
// scalar multiplier alpha chosen so the weights sum to s, which makes the
// whole construction a one-dimensional root find. The smooth value
// brackets the exact top-s sum from below with gap at most R_{p,s}/beta,
// and differences of consecutive levels approximate the k-th largest
// coordinate.

// R_{p,k} = p ln p - k ln k - (p-k) ln(p-k), with 0 ln 0 = 0: the entropy
// budget that bounds the smoothing gap.
struct EntropicCapacity {
  int p = 0;
  int kappa = 0;
  double value = 0.0;
  // The two closed-form ceilings on value used by the decay analyses.
  double bound_two_kappa_ln_p = 0.0;
  double bound_p_ln2 = 0.0;
};

// Capacity for any level s in [0, p]; the endpoints are exactly 0.
double capacity_value(int p, int s);

// Validated capacity for 1 <= kappa < p.
EntropicCapacity capacity(int p, int kappa);

struct SmoothTopK {
  double beta = 0.0;
  int s = 0;
  double alpha = 0.0;            // multiplier solving sum of weights = s
  std::vector<double> weights;   // sigmoid weights, each in (0,1)
  double value = 0.0;            // smoothed top-s sum
  double residual = 0.0;         // |sum weights - s| achieved by the solver
};

struct AlphaSolveOptions {
  double tol = 0.0;      // <= 0 selects the default 1e-12 * p
  int max_bisect = 200;
  int newton_steps = 3;
};

// Root of sum_j sigmoid(beta (x_j - alpha)) = s. The map is strictly
// decreasing in alpha so the root is unique; all-equal inputs short-circuit
// to the closed form alpha = c + ln(p/s - 1)/beta.
double solve_alpha(std::span<const double> x, int s, double beta,
                   const AlphaSolveOptions& opts = {});

SmoothTopK smooth_top_k_sum(std::span<const double> x, int s, double beta,
                            const AlphaSolveOptions& opts = {});

// F_k = f_k - f_{k-1}, the smooth surrogate of the k-th largest coordinate
// (f_0 = 0, so F_1 = f_1).
double smooth_kth(std::span<const double> x, int kappa, double beta,
                  const AlphaSolveOptions& opts = {});

// Gradient of the smoothed top-s sum; identical to the weight vector.
std::vector<double> grad_smooth_top_k_sum(std::span<const double> x, int s,
                                          double beta,
                                          const AlphaSolveOptions& opts = {});

// Gradient of F_kappa: the difference of consecutive weight vectors. It is
// entrywise nonnegative and sums to one (a probability vector).
std::vector<double> grad_smooth_kth(std::span<const double> x, int kappa,
                                    double beta,
                                    const AlphaSolveOptions& opts = {});

// Jacobian of the weight map x -> v(beta, x):
//   J = diag(gamma) - gamma gamma' / sum(gamma),  gamma_j = beta v_j (1-v_j).
// Every row sums to zero because the weights are constrained to sum to s.
Eigen::MatrixXd weight_jacobian(std::span<const double> x, int s, double beta,
                                const AlphaSolveOptions& opts = {});

// A scalar test function g with certified sup-norms of its derivatives,
// used to audit the derivative bounds of g(F_kappa(.)).
struct TestFunctional {
  std::string label;
  std::function<double(double)> fn;
  double G0 = 0.0;  // sup |g|; may be +infinity (then unusable for
                    // expectation-comparison experiments)
  double G1 = 0.0;
  double G2 = 0.0;
  double G3 = 0.0;

  static TestFunctional identity();
  static TestFunctional sine();
  static TestFunctional cosine();
  // Resolves one of the built-in labels above.
  static TestFunctional by_label(const std::string& label);
};

struct AuditOptions {
  double slack = 1.15;   // multiplicative allowance for FD discretization
  double tol = 0.0;      // alpha-solver tolerance passthrough
};

// Finite-difference audit of the summed second/third derivative bounds of
// m = g o F_kappa and of the stability of those sums under a bounded
// perturbation. Cost grows like p^3 function evaluations, hence the cap.
struct DerivativeAuditReport {
  int p = 0;
  int kappa = 0;
  double beta = 0.0;
  std::string g_label;
  double sum_abs_second = 0.0;
  double second_bound = 0.0;   // 4 k^2 G2 + 4 k G1 beta
  bool second_ok = false;
  double sum_abs_third = 0.0;
  double third_bound = 0.0;    // 8 k^3 G3 + 12 k^2 G2 beta + 14 k G1 beta^2
  bool third_ok = false;
  double stability_ratio = 1.0;  // FD sums at x + tau w relative to at x
};

DerivativeAuditReport derivative_bound_audit(std::span<const double> x,
                                             int kappa, double beta,
                                             const TestFunctional& g,
                                             const AuditOptions& opts = {});

// |F_kappa(x) - F_kappa(z)| / ||x - z||_inf; the Lipschitz property says
// this never exceeds one.
double lipschitz_ratio(std::span<const double> x, std::span<const double> z,
                       int kappa, double beta);

}  // namespace topkboot
