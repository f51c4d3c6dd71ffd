#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "topkboot/core_stats.hpp"
#include "topkboot/errors.hpp"
#include "topkboot/rng.hpp"

using namespace topkboot;

namespace {

std::vector<double> random_vector(RngStream& stream, int p, double scale = 2.0) {
  std::vector<double> x(static_cast<std::size_t>(p));
  for (auto& v : x) v = scale * stream.next_normal();
  return x;
}

// Brute-force oracle: full descending sort.
double kth_by_sort(std::vector<double> x, int k) {
  std::sort(x.begin(), x.end(), std::greater<double>());
  return x[static_cast<std::size_t>(k - 1)];
}

// Brute-force oracle: best sum over all k-subsets (p <= 12).
double best_subset_sum(const std::vector<double>& x, int k, bool squares) {
  const int p = static_cast<int>(x.size());
  double best = -1e300;
  for (unsigned mask = 0; mask < (1u << p); ++mask) {
    if (__builtin_popcount(mask) != k) continue;
    double s = 0.0;
    for (int j = 0; j < p; ++j) {
      if (mask & (1u << j)) s += squares ? x[j] * x[j] : x[j];
    }
    best = std::max(best, s);
  }
  return best;
}

}  // namespace

TEST_CASE("kth_largest hand examples") {
  std::vector<double> v{3.0, 1.0, 2.0};
  CHECK(kth_largest(v, 2) == 2.0);
  std::vector<double> ties{5.0, 5.0, 5.0};
  CHECK(kth_largest(ties, 3) == 5.0);
  CHECK_THROWS_AS(kth_largest(v, 0), domain_error);
  CHECK_THROWS_AS(kth_largest(v, 4), domain_error);
  std::vector<double> bad{1.0, std::nan("")};
  CHECK_THROWS_AS(kth_largest(bad, 1), domain_error);
}

TEST_CASE("kth_largest matches full-sort oracle on random vectors") {
  RngStream stream(42, StreamTag::scan, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const int p = 2 + static_cast<int>(stream.next_u64() % 15);
    const auto x = random_vector(stream, p);
    for (int k = 1; k <= p; ++k) {
      CHECK(kth_largest(x, k) == kth_by_sort(x, k));
    }
  }
}

TEST_CASE("top_k_sum hand examples and k = 0") {
  std::vector<double> v{3.0, 1.0, 2.0};
  CHECK(top_k_sum(v, 2) == 5.0);
  CHECK(top_k_sum(v, 0) == 0.0);
  CHECK_THROWS_AS(top_k_sum(v, 4), domain_error);
}

TEST_CASE("top_k_sum matches exhaustive subset enumeration") {
  RngStream stream(43, StreamTag::scan, 2);
  for (int trial = 0; trial < 60; ++trial) {
    const int p = 3 + static_cast<int>(stream.next_u64() % 10);  // <= 12
    const auto x = random_vector(stream, p);
    const int kmax = std::min(p, 6);
    for (int k = 1; k <= kmax; ++k) {
      CHECK(top_k_sum(x, k) ==
            doctest::Approx(best_subset_sum(x, k, false)).epsilon(1e-12));
    }
  }
}

TEST_CASE("square_sum_top_d hand examples and brute force") {
  std::vector<double> v{3.0, -1.0, 2.0};
  CHECK(square_sum_top_d(v, 2) == 13.0);
  std::vector<double> zeros{0.0, 0.0, 0.0, 0.0};
  for (int d = 1; d <= 4; ++d) CHECK(square_sum_top_d(zeros, d) == 0.0);

  RngStream stream(44, StreamTag::scan, 3);
  for (int trial = 0; trial < 60; ++trial) {
    const int p = 3 + static_cast<int>(stream.next_u64() % 10);
    const auto x = random_vector(stream, p);
    const int dmax = std::min(p, 6);
    for (int d = 1; d <= dmax; ++d) {
      CHECK(square_sum_top_d(x, d) ==
            doctest::Approx(best_subset_sum(x, d, true)).epsilon(1e-12));
    }
  }
}

TEST_CASE("kth largest as a difference of top sums") {
  RngStream stream(45, StreamTag::scan, 4);
  for (int trial = 0; trial < 50; ++trial) {
    const int p = 2 + static_cast<int>(stream.next_u64() % 12);
    const auto x = random_vector(stream, p);
    for (int k = 1; k <= p; ++k) {
      CHECK(kth_largest(x, k) ==
            doctest::Approx(top_k_sum(x, k) - top_k_sum(x, k - 1))
                .epsilon(1e-12));
    }
  }
}

TEST_CASE("negation reduction to lower order statistics") {
  RngStream stream(46, StreamTag::scan, 5);
  for (int trial = 0; trial < 50; ++trial) {
    const int p = 2 + static_cast<int>(stream.next_u64() % 12);
    const auto x = random_vector(stream, p);
    std::vector<double> neg(x.size());
    std::transform(x.begin(), x.end(), neg.begin(), [](double v) { return -v; });
    for (int k = 1; k <= p; ++k) {
      CHECK(kth_largest(neg, k) == -kth_largest(x, p + 1 - k));
    }
  }
}

TEST_CASE("ks_distance hand examples") {
  CHECK(ks_distance({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
  CHECK(ks_distance({0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}) == 1.0);
  CHECK(ks_distance({1.0, 2.0}, {2.0, 3.0}) == 0.5);
  CHECK_THROWS_AS(EmpiricalCdf::from_samples({}), domain_error);
}

TEST_CASE("ks_distance metric-like properties") {
  RngStream stream(47, StreamTag::scan, 6);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 5 + static_cast<int>(stream.next_u64() % 40);
    auto a = random_vector(stream, n);
    auto b = random_vector(stream, n);
    const double dab = ks_distance(a, b);
    const double dba = ks_distance(b, a);
    CHECK(dab == dba);
    CHECK(dab >= 0.0);
    CHECK(dab <= 1.0);
    CHECK(ks_distance(a, a) == 0.0);
  }
  // Zero iff identical multisets: shifting one sample breaks it.
  std::vector<double> a{1.0, 2.0, 3.0};
  std::vector<double> b{1.0, 2.0, 3.0 + 1e-9};
  CHECK(ks_distance(a, b) > 0.0);
}

TEST_CASE("empirical cdf evaluation") {
  const auto cdf = EmpiricalCdf::from_samples({3.0, 1.0, 2.0, 2.0});
  CHECK(cdf(0.5) == 0.0);
  CHECK(cdf(1.0) == doctest::Approx(0.25));
  CHECK(cdf(2.0) == doctest::Approx(0.75));
  CHECK(cdf(10.0) == 1.0);
  CHECK(cdf.count() == 4);
}
