#pragma once

#include <span>
#include <vector>

namespace topkboot {

// Exact (non-smooth) order-statistic functionals and empirical-CDF
// utilities. These are the oracles the smoothing and simulation layers
// are validated against, so everything here is deliberately simple.

// k-th largest coordinate x_[k] of x, 1-indexed, ties by value.
double kth_largest(std::span<const double> x, int k);

// Sum of the k largest coordinates; k = 0 is defined as 0. Equals the
// support function of the capped simplex {u in [0,1]^p : sum u = k}.
double top_k_sum(std::span<const double> x, int k);

// Largest sum of d squared coordinates (= sum of the d largest squares).
double square_sum_top_d(std::span<const double> x, int d);

// Immutable sorted sample; the empirical CDF it induces is
// F(t) = #{v <= t} / count.
class EmpiricalCdf {
 public:
  static EmpiricalCdf from_samples(std::vector<double> values);

  const std::vector<double>& sorted_values() const noexcept { return values_; }
  std::size_t count() const noexcept { return values_.size(); }
  double operator()(double t) const noexcept;

 private:
  explicit EmpiricalCdf(std::vector<double> sorted) : values_(std::move(sorted)) {}
  std::vector<double> values_;
};

// Two-sample Kolmogorov distance sup_t |F_a(t) - F_b(t)|, evaluated on
// the merged grid so both sides of every jump are seen.
double ks_distance(const EmpiricalCdf& a, const EmpiricalCdf& b);

// Convenience overload for raw (unsorted) samples.
double ks_distance(std::vector<double> a, std::vector<double> b);

}  // namespace topkboot
