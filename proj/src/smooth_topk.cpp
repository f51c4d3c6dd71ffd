#include "topkboot/smooth_topk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "topkboot/errors.hpp"

namespace topkboot {

namespace {

// ln(1 + e^t) without overflow.
double softplus(double t) {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

// sigmoid(t) = 1/(1+e^{-t}) evaluated through exp(-|t|).
double sigmoid(double t) {
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// sigmoid(t) * (1 - sigmoid(t)), symmetric in the sign of t.
double sigmoid_slope(double t) {
  const double e = std::exp(-std::fabs(t));
  const double d = 1.0 + e;
  return e / (d * d);
}

void check_inputs(std::span<const double> x, int s, double beta) {
  const int p = static_cast<int>(x.size());
  if (p < 2) throw domain_error("smoothing needs p >= 2 coordinates");
  for (double v : x) {
    if (!std::isfinite(v)) throw domain_error("coordinates must be finite");
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw domain_error("smoothing parameter beta must be positive and finite");
  }
  if (s < 1 || s >= p) {
    throw domain_error("level s out of range [1, p): s = " + std::to_string(s) +
                       ", p = " + std::to_string(p));
  }
}

double xlnx(double t) { return t > 0.0 ? t * std::log(t) : 0.0; }

struct AlphaResult {
  double alpha = 0.0;
  double residual = 0.0;
};

// Weight-sum residual h(alpha) = sum_j sigmoid(beta (x_j - alpha)) - s,
// strictly decreasing in alpha.
double weight_sum_minus_s(std::span<const double> x, int s, double beta,
                          double alpha) {
  double sum = 0.0;
  for (double xj : x) sum += sigmoid(beta * (xj - alpha));
  return sum - static_cast<double>(s);
}

double weight_sum_slope(std::span<const double> x, double beta, double alpha) {
  double sum = 0.0;
  for (double xj : x) sum += sigmoid_slope(beta * (xj - alpha));
  return -beta * sum;
}

AlphaResult solve_alpha_impl(std::span<const double> x, int s, double beta,
                             const AlphaSolveOptions& opts) {
  const int p = static_cast<int>(x.size());
  const double tol = opts.tol > 0.0 ? opts.tol : 1e-12 * p;
  const auto [min_it, max_it] = std::minmax_element(x.begin(), x.end());
  const double xmin = *min_it;
  const double xmax = *max_it;

  if (xmin == xmax) {
    // Degenerate all-equal input: the sigmoid equation is solvable in
    // closed form and the bracket below would collapse.
    const double alpha =
        xmin + std::log(static_cast<double>(p) / s - 1.0) / beta;
    return {alpha, std::fabs(weight_sum_minus_s(x, s, beta, alpha))};
  }

  double lo = xmin - std::log(2.0 * p / s) / beta;
  double hi = xmax + std::log(2.0 * p / (p - s)) / beta;
  double h_lo = weight_sum_minus_s(x, s, beta, lo);
  double h_hi = weight_sum_minus_s(x, s, beta, hi);
  // The margins above are the natural first guess but are not a certified
  // bracket for extreme s; widen until the root is straddled. ln(2p) on
  // both sides always suffices, so this terminates immediately in practice.
  double margin = std::log(2.0 * p) / beta;
  while (h_lo < 0.0) {
    lo -= margin;
    h_lo = weight_sum_minus_s(x, s, beta, lo);
    margin *= 2.0;
  }
  margin = std::log(2.0 * p) / beta;
  while (h_hi > 0.0) {
    hi += margin;
    h_hi = weight_sum_minus_s(x, s, beta, hi);
    margin *= 2.0;
  }

  double mid = 0.5 * (lo + hi);
  double h_mid = weight_sum_minus_s(x, s, beta, mid);
  for (int it = 0; it < opts.max_bisect; ++it) {
    if (std::fabs(h_mid) <= 0.125 * tol) break;
    if (h_mid > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    const double next = 0.5 * (lo + hi);
    if (next == mid) break;  // bracket exhausted at double precision
    mid = next;
    h_mid = weight_sum_minus_s(x, s, beta, mid);
  }

  for (int it = 0; it < opts.newton_steps; ++it) {
    const double slope = weight_sum_slope(x, beta, mid);
    if (!(slope < 0.0)) break;
    double next = mid - h_mid / slope;
    if (!(next > lo && next < hi)) break;
    mid = next;
    h_mid = weight_sum_minus_s(x, s, beta, mid);
  }

  const double residual = std::fabs(h_mid);
  if (residual > tol) {
    throw numeric_error(
        "multiplier solve did not reach tolerance " + std::to_string(tol) +
            "; final residual " + std::to_string(residual),
        residual);
  }
  return {mid, residual};
}

// Smoothed top-s sum evaluated at the solved multiplier:
//   f = s * alpha + (1/beta) sum_j softplus(beta (x_j - alpha)) - R_{p,s}/beta,
// an algebraic rearrangement of x'v - r(v)/beta that only touches softplus.
double value_at_alpha(std::span<const double> x, int s, double beta,
                      double alpha) {
  const int p = static_cast<int>(x.size());
  double acc = 0.0;
  for (double xj : x) acc += softplus(beta * (xj - alpha));
  return s * alpha + acc / beta - capacity_value(p, s) / beta;
}

}  // namespace

double capacity_value(int p, int s) {
  if (p < 2) throw domain_error("capacity needs p >= 2");
  if (s < 0 || s > p) throw domain_error("capacity level out of [0, p]");
  const double pd = static_cast<double>(p);
  const double sd = static_cast<double>(s);
  return xlnx(pd) - xlnx(sd) - xlnx(pd - sd);
}

EntropicCapacity capacity(int p, int kappa) {
  if (p < 2) throw domain_error("capacity needs p >= 2");
  if (kappa < 1 || kappa >= p) {
    throw domain_error("capacity requires 1 <= kappa < p");
  }
  EntropicCapacity out;
  out.p = p;
  out.kappa = kappa;
  out.value = capacity_value(p, kappa);
  out.bound_two_kappa_ln_p = 2.0 * kappa * std::log(static_cast<double>(p));
  out.bound_p_ln2 = p * std::log(2.0);
  return out;
}

double solve_alpha(std::span<const double> x, int s, double beta,
                   const AlphaSolveOptions& opts) {
  check_inputs(x, s, beta);
  return solve_alpha_impl(x, s, beta, opts).alpha;
}

SmoothTopK smooth_top_k_sum(std::span<const double> x, int s, double beta,
                            const AlphaSolveOptions& opts) {
  check_inputs(x, s, beta);
  const auto sol = solve_alpha_impl(x, s, beta, opts);
  SmoothTopK out;
  out.beta = beta;
  out.s = s;
  out.alpha = sol.alpha;
  out.residual = sol.residual;
  out.weights.resize(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    out.weights[j] = sigmoid(beta * (x[j] - sol.alpha));
  }
  out.value = value_at_alpha(x, s, beta, sol.alpha);
  return out;
}

double smooth_kth(std::span<const double> x, int kappa, double beta,
                  const AlphaSolveOptions& opts) {
  check_inputs(x, kappa, beta);
  const double f_k =
      value_at_alpha(x, kappa, beta, solve_alpha_impl(x, kappa, beta, opts).alpha);
  if (kappa == 1) return f_k;
  const double f_km1 = value_at_alpha(
      x, kappa - 1, beta, solve_alpha_impl(x, kappa - 1, beta, opts).alpha);
  return f_k - f_km1;
}

std::vector<double> grad_smooth_top_k_sum(std::span<const double> x, int s,
                                          double beta,
                                          const AlphaSolveOptions& opts) {
  return smooth_top_k_sum(x, s, beta, opts).weights;
}

std::vector<double> grad_smooth_kth(std::span<const double> x, int kappa,
                                    double beta,
                                    const AlphaSolveOptions& opts) {
  check_inputs(x, kappa, beta);
  const auto sol_k = solve_alpha_impl(x, kappa, beta, opts);
  if (kappa == 1) {
    std::vector<double> grad(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
      grad[j] = sigmoid(beta * (x[j] - sol_k.alpha));
    }
    return grad;
  }
  const auto sol_km1 = solve_alpha_impl(x, kappa - 1, beta, opts);
  // The multiplier is strictly decreasing in the level, so the level-kappa
  // weights dominate the level-(kappa-1) weights componentwise.
  if (!(sol_k.alpha < sol_km1.alpha)) {
    throw numeric_error(
        "multiplier ordering alpha_k < alpha_{k-1} violated numerically",
        sol_k.alpha - sol_km1.alpha);
  }
  std::vector<double> grad(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    grad[j] = sigmoid(beta * (x[j] - sol_k.alpha)) -
              sigmoid(beta * (x[j] - sol_km1.alpha));
  }
  return grad;
}

Eigen::MatrixXd weight_jacobian(std::span<const double> x, int s, double beta,
                                const AlphaSolveOptions& opts) {
  check_inputs(x, s, beta);
  const auto sol = solve_alpha_impl(x, s, beta, opts);
  const int p = static_cast<int>(x.size());
  Eigen::VectorXd gamma(p);
  for (int j = 0; j < p; ++j) {
    gamma[j] = beta * sigmoid_slope(beta * (x[j] - sol.alpha));
  }
  const double total = gamma.sum();
  Eigen::MatrixXd jac = -(gamma * gamma.transpose()) / total;
  jac.diagonal() += gamma;
  return jac;
}

TestFunctional TestFunctional::identity() {
  return {"identity", [](double t) { return t; },
          std::numeric_limits<double>::infinity(), 1.0, 0.0, 0.0};
}

TestFunctional TestFunctional::sine() {
  return {"sin", [](double t) { return std::sin(t); }, 1.0, 1.0, 1.0, 1.0};
}

TestFunctional TestFunctional::cosine() {
  return {"cos", [](double t) { return std::cos(t); }, 1.0, 1.0, 1.0, 1.0};
}

TestFunctional TestFunctional::by_label(const std::string& label) {
  if (label == "identity") return identity();
  if (label == "sin") return sine();
  if (label == "cos") return cosine();
  throw domain_error("unknown test functional: " + label);
}

namespace {

double eval_m(std::span<const double> x, int kappa, double beta,
              const TestFunctional& g, const AlphaSolveOptions& opts) {
  return g.fn(smooth_kth(x, kappa, beta, opts));
}

struct FdSums {
  double second = 0.0;
  double third = 0.0;
};

FdSums fd_derivative_sums(std::span<const double> base, int kappa, double beta,
                          const TestFunctional& g,
                          const AlphaSolveOptions& opts) {
  const int p = static_cast<int>(base.size());
  std::vector<double> pt(base.begin(), base.end());
  const double eps = std::numeric_limits<double>::epsilon();
  const double h2_scale = std::cbrt(eps);
  const double h3_scale = std::pow(eps, 0.2);
  std::vector<double> h2(p), h3(p);
  for (int j = 0; j < p; ++j) {
    h2[j] = h2_scale * (1.0 + std::fabs(base[j]));
    h3[j] = h3_scale * (1.0 + std::fabs(base[j]));
  }

  auto eval_shift2 = [&](int j, double sj, int k, double sk) {
    pt.assign(base.begin(), base.end());
    pt[j] += sj * h2[j];
    pt[k] += sk * h2[k];
    return eval_m(pt, kappa, beta, g, opts);
  };
  auto eval_shift3 = [&](int j, double sj, int k, double sk, int l, double sl) {
    pt.assign(base.begin(), base.end());
    pt[j] += sj * h3[j];
    pt[k] += sk * h3[k];
    pt[l] += sl * h3[l];
    return eval_m(pt, kappa, beta, g, opts);
  };

  FdSums sums;
  const double m0 = eval_m(base, kappa, beta, g, opts);
  for (int j = 0; j < p; ++j) {
    for (int k = j; k < p; ++k) {
      double d2;
      if (j == k) {
        const double up = eval_shift2(j, 1.0, j, 0.0);
        const double dn = eval_shift2(j, -1.0, j, 0.0);
        d2 = (up - 2.0 * m0 + dn) / (h2[j] * h2[j]);
      } else {
        const double pp = eval_shift2(j, 1.0, k, 1.0);
        const double pm = eval_shift2(j, 1.0, k, -1.0);
        const double mp = eval_shift2(j, -1.0, k, 1.0);
        const double mm = eval_shift2(j, -1.0, k, -1.0);
        d2 = (pp - pm - mp + mm) / (4.0 * h2[j] * h2[k]);
      }
      sums.second += (j == k ? 1.0 : 2.0) * std::fabs(d2);
    }
  }

  for (int j = 0; j < p; ++j) {
    for (int k = j; k < p; ++k) {
      for (int l = k; l < p; ++l) {
        double d3;
        if (j == k && k == l) {
          // 5-point stencil for a pure third derivative.
          const double f2p = eval_shift3(j, 2.0, j, 0.0, j, 0.0);
          const double f1p = eval_shift3(j, 1.0, j, 0.0, j, 0.0);
          const double f1m = eval_shift3(j, -1.0, j, 0.0, j, 0.0);
          const double f2m = eval_shift3(j, -2.0, j, 0.0, j, 0.0);
          d3 = (f2p - 2.0 * f1p + 2.0 * f1m - f2m) /
               (2.0 * h3[j] * h3[j] * h3[j]);
        } else if (j == k) {
          // d^2/dx_j^2 d/dx_l via second difference of a central difference.
          const double a = eval_shift3(j, 1.0, l, 1.0, j, 0.0);
          const double b = eval_shift3(j, -1.0, l, 1.0, j, 0.0);
          const double c = eval_shift3(j, 0.0, l, 1.0, j, 0.0);
          const double d = eval_shift3(j, 1.0, l, -1.0, j, 0.0);
          const double e = eval_shift3(j, -1.0, l, -1.0, j, 0.0);
          const double f = eval_shift3(j, 0.0, l, -1.0, j, 0.0);
          d3 = ((a - 2.0 * c + b) - (d - 2.0 * f + e)) /
               (2.0 * h3[l] * h3[j] * h3[j]);
        } else if (k == l) {
          const double a = eval_shift3(k, 1.0, j, 1.0, k, 0.0);
          const double b = eval_shift3(k, -1.0, j, 1.0, k, 0.0);
          const double c = eval_shift3(k, 0.0, j, 1.0, k, 0.0);
          const double d = eval_shift3(k, 1.0, j, -1.0, k, 0.0);
          const double e = eval_shift3(k, -1.0, j, -1.0, k, 0.0);
          const double f = eval_shift3(k, 0.0, j, -1.0, k, 0.0);
          d3 = ((a - 2.0 * c + b) - (d - 2.0 * f + e)) /
               (2.0 * h3[j] * h3[k] * h3[k]);
        } else {
          double acc = 0.0;
          for (double sj : {1.0, -1.0}) {
            for (double sk : {1.0, -1.0}) {
              for (double sl : {1.0, -1.0}) {
                acc += sj * sk * sl * eval_shift3(j, sj, k, sk, l, sl);
              }
            }
          }
          d3 = acc / (8.0 * h3[j] * h3[k] * h3[l]);
        }
        int multiplicity;
        if (j == k && k == l) {
          multiplicity = 1;
        } else if (j == k || k == l || j == l) {
          multiplicity = 3;
        } else {
          multiplicity = 6;
        }
        sums.third += multiplicity * std::fabs(d3);
      }
    }
  }
  return sums;
}

}  // namespace

DerivativeAuditReport derivative_bound_audit(std::span<const double> x,
                                             int kappa, double beta,
                                             const TestFunctional& g,
                                             const AuditOptions& opts) {
  const int p = static_cast<int>(x.size());
  if (p > 12) {
    throw capability_error(
        "derivative audit is limited to p <= 12 (finite-difference tensor "
        "cost); got p = " + std::to_string(p));
  }
  check_inputs(x, kappa, beta);

  AlphaSolveOptions sopts;
  sopts.tol = opts.tol;
  const auto sums = fd_derivative_sums(x, kappa, beta, g, sopts);

  DerivativeAuditReport rep;
  rep.p = p;
  rep.kappa = kappa;
  rep.beta = beta;
  rep.g_label = g.label;
  rep.sum_abs_second = sums.second;
  rep.second_bound = 4.0 * kappa * kappa * g.G2 + 4.0 * kappa * g.G1 * beta;
  rep.second_ok = sums.second <= rep.second_bound * opts.slack;
  rep.sum_abs_third = sums.third;
  rep.third_bound = 8.0 * std::pow(kappa, 3) * g.G3 +
                    12.0 * kappa * kappa * g.G2 * beta +
                    14.0 * kappa * g.G1 * beta * beta;
  rep.third_ok = sums.third <= rep.third_bound * opts.slack;

  // Stability probe: shift by a bounded perturbation ||w||_inf * beta <= 1
  // and compare the derivative sums.
  std::vector<double> shifted(x.begin(), x.end());
  for (int j = 0; j < p; ++j) {
    const double w = ((j % 2 == 0) ? 1.0 : -1.0) / beta;
    shifted[j] += 0.5 * w;
  }
  const auto shifted_sums = fd_derivative_sums(shifted, kappa, beta, g, sopts);
  const double denom = std::max(sums.second + sums.third, 1e-300);
  rep.stability_ratio = (shifted_sums.second + shifted_sums.third) / denom;
  return rep;
}

double lipschitz_ratio(std::span<const double> x, std::span<const double> z,
                       int kappa, double beta) {
  if (x.size() != z.size()) {
    throw domain_error("Lipschitz check needs equal-length vectors");
  }
  double gap = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    gap = std::max(gap, std::fabs(x[j] - z[j]));
  }
  if (gap == 0.0) return 0.0;
  const double diff =
      std::fabs(smooth_kth(x, kappa, beta) - smooth_kth(z, kappa, beta));
  return diff / gap;
}

}  // namespace topkboot
