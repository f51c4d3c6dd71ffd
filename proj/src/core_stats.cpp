#include "topkboot/core_stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <string>

#include "topkboot/errors.hpp"

namespace topkboot {

namespace {

void check_coords(std::span<const double> x) {
  if (x.empty()) throw domain_error("vector must have at least one coordinate");
  for (double v : x) {
    if (!std::isfinite(v)) {
      throw domain_error("vector coordinates must be finite");
    }
  }
}

void check_index(std::span<const double> x, int k, const char* name) {
  if (k < 1 || static_cast<std::size_t>(k) > x.size()) {
    throw domain_error(std::string(name) + " out of range [1, p]: " +
                       std::to_string(k) + " with p = " +
                       std::to_string(x.size()));
  }
}

}  // namespace

double kth_largest(std::span<const double> x, int k) {
  check_coords(x);
  check_index(x, k, "kappa");
  std::vector<double> work(x.begin(), x.end());
  auto nth = work.begin() + (k - 1);
  std::nth_element(work.begin(), nth, work.end(), std::greater<double>());
  return *nth;
}

double top_k_sum(std::span<const double> x, int k) {
  check_coords(x);
  if (k == 0) return 0.0;
  check_index(x, k, "kappa");
  std::vector<double> work(x.begin(), x.end());
  auto nth = work.begin() + (k - 1);
  std::nth_element(work.begin(), nth, work.end(), std::greater<double>());
  return std::accumulate(work.begin(), work.begin() + k, 0.0);
}

double square_sum_top_d(std::span<const double> x, int d) {
  check_coords(x);
  check_index(x, d, "d");
  std::vector<double> squares(x.size());
  std::transform(x.begin(), x.end(), squares.begin(),
                 [](double v) { return v * v; });
  auto nth = squares.begin() + (d - 1);
  std::nth_element(squares.begin(), nth, squares.end(), std::greater<double>());
  return std::accumulate(squares.begin(), squares.begin() + d, 0.0);
}

EmpiricalCdf EmpiricalCdf::from_samples(std::vector<double> values) {
  if (values.empty()) throw domain_error("empirical CDF needs at least one sample");
  for (double v : values) {
    if (!std::isfinite(v)) throw domain_error("samples must be finite");
  }
  std::sort(values.begin(), values.end());
  return EmpiricalCdf(std::move(values));
}

double EmpiricalCdf::operator()(double t) const noexcept {
  const auto it = std::upper_bound(values_.begin(), values_.end(), t);
  return static_cast<double>(it - values_.begin()) /
         static_cast<double>(values_.size());
}

double ks_distance(const EmpiricalCdf& a, const EmpiricalCdf& b) {
  const auto& va = a.sorted_values();
  const auto& vb = b.sorted_values();
  const double na = static_cast<double>(va.size());
  const double nb = static_cast<double>(vb.size());
  std::size_t ia = 0;
  std::size_t ib = 0;
  double max_gap = 0.0;
  // Walk the merged grid; after consuming all ties at each distinct value
  // the running difference is the right-side gap, and the value recorded
  // on the previous step is the left-side gap of the next jump.
  while (ia < va.size() || ib < vb.size()) {
    double t;
    if (ib == vb.size() || (ia < va.size() && va[ia] <= vb[ib])) {
      t = va[ia];
    } else {
      t = vb[ib];
    }
    while (ia < va.size() && va[ia] == t) ++ia;
    while (ib < vb.size() && vb[ib] == t) ++ib;
    const double gap =
        std::fabs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb);
    max_gap = std::max(max_gap, gap);
  }
  return max_gap;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  return ks_distance(EmpiricalCdf::from_samples(std::move(a)),
                     EmpiricalCdf::from_samples(std::move(b)));
}

}  // namespace topkboot
