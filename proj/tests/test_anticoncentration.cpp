#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "topkboot/anticoncentration.hpp"
#include "topkboot/errors.hpp"

using namespace topkboot;

TEST_CASE("levy concentration: scalar normal closed form") {
  const auto scalar = CovarianceModel::identity(1);
  const auto est = levy_concentration(scalar, StatSelector::kth(1),
                                      {0.1, 100.0}, 200000, 3);
  // Centered window of a symmetric unimodal law: 2 Phi(eps) - 1.
  CHECK(est[0].value ==
        doctest::Approx(0.07965567455405796).epsilon(0.08));
  CHECK(est[0].value <= 0.0796556745540580 + 3.0 * est[0].mc_se + 0.003);
  CHECK(est[1].value == 1.0);  // window swallows everything
}

TEST_CASE("levy concentration: monotone in epsilon and subadditive") {
  const auto model = CovarianceModel::equicorrelated(20, 0.2);
  const auto est = levy_concentration(model, StatSelector::kth(2),
                                      {0.05, 0.1, 0.2, 0.4}, 50000, 5);
  for (std::size_t i = 0; i + 1 < est.size(); ++i) {
    CHECK(est[i].value <= est[i + 1].value + 1e-12);
  }
  // A 2eps window never beats two eps windows by more than MC noise.
  CHECK(est[1].value <=
        2.0 * est[0].value + 3.0 * (est[0].mc_se + est[1].mc_se));
  CHECK(est[2].value <=
        2.0 * est[1].value + 3.0 * (est[1].mc_se + est[2].mc_se));
}

TEST_CASE("levy concentration: scale equivariance on a grid") {
  const auto base = CovarianceModel::identity(4);
  Eigen::MatrixXd scaled_m = 4.0 * Eigen::MatrixXd::Identity(4, 4);
  const auto scaled = CovarianceModel::from_matrix(scaled_m);
  const auto est_base =
      levy_concentration(base, StatSelector::kth(2), {0.1, 0.2}, 80000, 7);
  const auto est_scaled =
      levy_concentration(scaled, StatSelector::kth(2), {0.2, 0.4}, 80000, 7);
  // Scaling draws by 2 doubles the epsilon that achieves the same mass.
  for (std::size_t i = 0; i < est_base.size(); ++i) {
    CHECK(est_scaled[i].value ==
          doctest::Approx(est_base[i].value)
              .epsilon(0.15));
  }
}

TEST_CASE("levy concentration: equal-variance ceiling") {
  const auto model = CovarianceModel::equicorrelated(30, 0.3);
  const auto maxes = gaussian_max_expectations(model, 50000, 11);
  for (int k : {1, 2, 3}) {
    const auto est = levy_concentration(model, StatSelector::kth(k),
                                        {0.02, 0.05}, 50000, 13);
    for (const auto& cell : est) {
      const double bound = 4.0 * k * cell.epsilon * (maxes.a_p + 1.0) / 1.0;
      CHECK(cell.value <= bound + 3.0 * cell.mc_se);
    }
  }
}

TEST_CASE("gaussian max expectations: closed forms and ceilings") {
  // Two independent standard normals: E max = 1/sqrt(pi).
  const auto pair = CovarianceModel::identity(2);
  const auto rep = gaussian_max_expectations(pair, 200000, 17);
  CHECK(rep.a_p ==
        doctest::Approx(0.5641895835477563).epsilon(0.02));
  CHECK(std::fabs(rep.a_p - 0.5641895835477563) <= 3.0 * rep.se_a + 0.002);

  // Single coordinate: the max is one centered normal.
  const auto one = CovarianceModel::identity(1);
  const auto rep1 = gaussian_max_expectations(one, 100000, 19);
  CHECK(std::fabs(rep1.a_p) <= 3.0 * rep1.se_a + 0.002);

  // Perfectly correlated coordinates: the max of identical copies.
  const auto ones = CovarianceModel::from_matrix(Eigen::MatrixXd::Ones(6, 6));
  const auto rep_ones = gaussian_max_expectations(ones, 100000, 23);
  CHECK(std::fabs(rep_ones.a_p) <= 3.0 * rep_ones.se_a + 0.01);

  for (int p : {10, 100, 1000}) {
    const auto model = CovarianceModel::identity(p);
    const auto r = gaussian_max_expectations(model, 30000, 29);
    CHECK(r.a_p <= r.bound_a + 3.0 * r.se_a);
    CHECK(r.a_bar_p <= r.bound_a_bar + 3.0 * r.se_a_bar);
    CHECK(r.a_p >= 0.0);
  }
}

TEST_CASE("gaussian pair comparison: identical laws sit at zero (coupled)") {
  GaussianPairSpec pair{CovarianceModel::equicorrelated(15, 0.2),
                        CovarianceModel::equicorrelated(15, 0.2)};
  CHECK(pair.sigma_gap() == 0.0);
  const auto rep =
      gaussian_pair_comparison(pair, KappaSpec::fixed(1), 20000, 31, true);
  for (const auto& cell : rep.ladder) {
    CHECK(cell.ks == 0.0);  // same factor, same draws
  }
  const auto rep_ind =
      gaussian_pair_comparison(pair, KappaSpec::fixed(1), 20000, 31, false);
  for (const auto& cell : rep_ind.ladder) {
    CHECK(cell.ks <= 1.36 * std::sqrt(2.0 / 20000) * 1.5);
  }
}

TEST_CASE("gaussian pair comparison: gap ladder decreases and slope is sane") {
  GaussianPairSpec pair{CovarianceModel::equicorrelated(25, 0.3),
                        CovarianceModel::equicorrelated(25, 0.2)};
  CHECK(pair.sigma_gap() == doctest::Approx(0.1).epsilon(1e-12));
  const auto rep =
      gaussian_pair_comparison(pair, KappaSpec::fixed(2), 50000, 37, true);
  REQUIRE(rep.ladder.size() == 3);
  CHECK(rep.ladder[0].gap == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(rep.ladder[2].gap == doctest::Approx(0.001).epsilon(1e-9));
  CHECK(rep.ladder[0].ks > rep.ladder[1].ks);
  CHECK(rep.ladder[1].ks > rep.ladder[2].ks);
  CHECK(rep.loglog_slope >= 0.3);
  CHECK(rep.loglog_slope <= 1.1);
}

TEST_CASE("square sum anticoncentration: chi-square window oracle at d = 1") {
  const auto scalar = CovarianceModel::identity(1);
  const auto rep =
      square_sum_anticoncentration(scalar, 1, {0.01, 0.05}, 200000, 41);
  // S_1^2 of a scalar normal is chi-square(1); its density blows up at 0 so
  // the best window hugs zero: mass = chi2cdf(eps).
  CHECK(rep.cells[0].mass ==
        doctest::Approx(0.07965567455405796).epsilon(0.05));
  CHECK(rep.cells[1].mass ==
        doctest::Approx(0.17693672624187852).epsilon(0.05));
  for (const auto& cell : rep.cells) CHECK(cell.verdict == "not-applicable");
}

TEST_CASE("square sum anticoncentration: linear window decay for d >= 2") {
  const auto model = CovarianceModel::identity(8);
  const auto rep = square_sum_anticoncentration(
      model, 2, {0.0125, 0.025, 0.05, 0.1}, 100000, 43);
  CHECK(rep.loglog_slope >= 0.8);
  CHECK(rep.loglog_slope <= 1.2);
  for (const auto& cell : rep.cells) {
    CHECK(cell.verdict == "ok");
  }
}

TEST_CASE("square sum anticoncentration: eigenvalue precondition gate") {
  // Exactly p-d+1 positive eigenvalues trips the capability gate.
  Eigen::VectorXd diag(5);
  diag << 0.0, 0.0, 1.0, 1.0, 1.0;  // 3 positive, p=5, d=3 needs 4
  const auto model = CovarianceModel::from_matrix(
      Eigen::MatrixXd(diag.asDiagonal()));
  CHECK_THROWS_AS(
      square_sum_anticoncentration(model, 3, {0.1}, 1000, 47),
      capability_error);
}

TEST_CASE("log binomial") {
  CHECK(log_binomial(10, 3) == doctest::Approx(std::log(120.0)).epsilon(1e-12));
  CHECK(log_binomial(5, 0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(log_binomial(4, 5), domain_error);
}
