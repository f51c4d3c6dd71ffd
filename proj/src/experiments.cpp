#include "topkboot/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "topkboot/core_stats.hpp"
#include "topkboot/errors.hpp"
#include "topkboot/parallel.hpp"

namespace topkboot {

namespace {

double ln_pn(int p, int n) {
  return std::log(static_cast<double>(p) * static_cast<double>(n));
}

// Draws of the target statistic on the data side (fresh data per rep).
std::vector<double> draw_data_stats(const GeneratorSpec& gen, int n, int k,
                                    int d, std::uint64_t seed,
                                    std::uint64_t cell, int mc_reps,
                                    int threads) {
  std::vector<double> out(static_cast<std::size_t>(mc_reps));
  parallel_for(mc_reps, threads, [&](std::int64_t rep) {
    GeneratorSpec local = gen;
    local.seed = derive_key(seed, StreamTag::data, cell);
    const SampleMatrix data =
        sample_data_rep(local, n, static_cast<std::uint64_t>(rep));
    const Eigen::VectorXd x = rescaled_sum(data);
    const std::span<const double> view(x.data(),
                                       static_cast<std::size_t>(x.size()));
    out[static_cast<std::size_t>(rep)] =
        d > 0 ? square_sum_top_d(view, d) : kth_largest(view, k);
  });
  return out;
}

// Draws of the statistic on the Gaussian side. Population mode samples the
// generator's covariance directly; plugin mode estimates it once from an
// auxiliary dataset of the same size.
std::vector<double> draw_gaussian_stats(const GeneratorSpec& gen, int n, int k,
                                        int d, GaussianSide side,
                                        std::uint64_t seed, std::uint64_t cell,
                                        int mc_reps, int threads) {
  const int p = gen.covariance.dim();
  Eigen::MatrixXd factor;
  bool identity_factor = false;
  if (side == GaussianSide::population) {
    factor = gen.covariance.factor();
    identity_factor = gen.covariance.is_identity();
  } else {
    GeneratorSpec local = gen;
    local.seed = derive_key(seed, StreamTag::data, cell, 0xA0A0);
    const SampleMatrix aux = sample_data_rep(local, n, 0);
    factor = psd_factor(empirical_second_moment(aux));
  }
  std::vector<double> out(static_cast<std::size_t>(mc_reps));
  parallel_for(mc_reps, threads, [&](std::int64_t rep) {
    RngStream stream(derive_key(seed, StreamTag::gaussian, cell),
                     StreamTag::gaussian, static_cast<std::uint64_t>(rep));
    Eigen::VectorXd g(p);
    for (int j = 0; j < p; ++j) g[j] = stream.next_normal();
    Eigen::VectorXd y = identity_factor ? g : Eigen::VectorXd(factor * g);
    const std::span<const double> view(y.data(),
                                       static_cast<std::size_t>(y.size()));
    out[static_cast<std::size_t>(rep)] =
        d > 0 ? square_sum_top_d(view, d) : kth_largest(view, k);
  });
  return out;
}

void check_spec(const DecayExperimentSpec& spec, bool need_n_ladder) {
  if (spec.mc_reps < 1) throw domain_error("mc_reps must be >= 1");
  if (need_n_ladder) {
    if (spec.n_ladder.empty()) throw domain_error("n ladder must be nonempty");
    for (std::size_t i = 0; i + 1 < spec.n_ladder.size(); ++i) {
      if (spec.n_ladder[i + 1] <= spec.n_ladder[i]) {
        throw domain_error("n ladder must be strictly increasing");
      }
    }
  }
}

}  // namespace

double default_beta(int p, int n) {
  return std::log(static_cast<double>(std::max(p, 2))) *
         std::pow(static_cast<double>(std::max(n, 1)), 0.125);
}

double ks_cell_se(double estimate, int mc_reps) {
  // Two dispersion sources for a two-sample KS estimate: the binomial
  // variance of the empirical gap at the achieved supremum, and the
  // fluctuation of the supremum itself, which near the null follows the
  // Kolmogorov law with standard deviation ~0.26 on the sqrt(2/m) scale.
  const double m = static_cast<double>(mc_reps);
  const double rate = std::max(estimate, 1.0 / m);
  const double binom = 2.0 * rate * (1.0 - std::min(rate, 1.0)) / m;
  const double sup_null = 0.26 * 0.26 * 2.0 / m;
  return std::sqrt(binom + sup_null);
}

double regime_lhs_fixed(const GeneratorSpec& gen, int n) {
  const int p = gen.covariance.dim();
  const double bn = gen.envelope_bn();
  const double moment_power = gen.regime() == MomentRegime::e1 ? 2.0 : 4.0;
  return std::pow(bn, moment_power) * std::pow(ln_pn(p, n), 7.0) / n;
}

double regime_lhs_diverging(const GeneratorSpec& gen, int n, double lambda_exp) {
  const int p = gen.covariance.dim();
  return std::pow(static_cast<double>(p), 24.0 * (1.0 - lambda_exp)) *
         regime_lhs_fixed(gen, n);
}

double regime_lhs_square(const GeneratorSpec& gen, int n, int d, double b_exp) {
  const int p = gen.covariance.dim();
  const double expo = 8.0 * std::max(static_cast<double>(d) + b_exp, 3.0);
  return std::pow(static_cast<double>(p), expo) * regime_lhs_fixed(gen, n);
}

namespace {

ExperimentReport run_ladder(const DecayExperimentSpec& spec, int d,
                            const std::string& kind) {
  check_spec(spec, /*need_n_ladder=*/true);
  const int p = spec.generator.covariance.dim();
  const int k = d > 0 ? 0 : spec.kappa.kappa_for(p);
  if (d > 0 && (d < 1 || d > p)) throw domain_error("d out of [1, p]");

  ExperimentReport report;
  report.kind = kind;
  report.noise_floor = 1.36 * std::sqrt(2.0 / spec.mc_reps);
  for (std::size_t ci = 0; ci < spec.n_ladder.size(); ++ci) {
    const int n = spec.n_ladder[ci];
    const auto cell = static_cast<std::uint64_t>(ci);
    const std::vector<double> xs = draw_data_stats(
        spec.generator, n, k, d, spec.seed, cell, spec.mc_reps, spec.threads);
    const std::vector<double> ys =
        draw_gaussian_stats(spec.generator, n, k, d, spec.side, spec.seed, cell,
                            spec.mc_reps, spec.threads);
    CellResult res;
    res.n = n;
    res.p = p;
    res.kappa_or_d = d > 0 ? d : k;
    res.estimate = ks_distance(xs, ys);
    res.mc_se = ks_cell_se(res.estimate, spec.mc_reps);
    if (d > 0) {
      res.regime_lhs = regime_lhs_square(spec.generator, n, d, 0.0);
      res.regime_label =
          spec.generator.regime() == MomentRegime::e1 ? "S.1''" : "S.2''";
    } else {
      res.regime_lhs = regime_lhs_fixed(spec.generator, n);
      res.regime_label =
          spec.generator.regime() == MomentRegime::e1 ? "S.1" : "S.2";
    }
    res.regime_ok = res.regime_lhs <= spec.C2 * std::pow(n, -spec.c2);
    res.cell_seed = derive_key(spec.seed, StreamTag::data, cell);
    report.cells.push_back(res);
  }
  return report;
}

}  // namespace

ExperimentReport rho_kappa_experiment(const DecayExperimentSpec& spec) {
  return run_ladder(spec, 0, "rho_kappa");
}

ExperimentReport rho_d_square_experiment(const DecayExperimentSpec& spec) {
  if (spec.d < 1) throw domain_error("rho_d experiment needs d >= 1");
  // The anti-concentration precondition for the Gaussian side: enough
  // positive spectrum (only binding for d >= 2).
  if (spec.d >= 2) {
    const Eigen::VectorXd& lam = spec.generator.covariance.spectrum();
    int positive = 0;
    for (int j = 0; j < lam.size(); ++j) {
      if (lam[j] > 1e-12) ++positive;
    }
    if (positive < spec.generator.covariance.dim() - spec.d + 2) {
      throw capability_error(
          "square-sum experiment needs p-d+2 positive eigenvalues");
    }
  }
  return run_ladder(spec, spec.d, "rho_d");
}

ExperimentReport diverging_kappa_experiment(const DecayExperimentSpec& spec) {
  if (spec.kappa.mode != KappaSpec::Mode::diverging) {
    throw domain_error("diverging experiment needs kappa.mode = diverging");
  }
  if (spec.p_ladder.empty()) throw domain_error("p ladder must be nonempty");
  check_spec(spec, /*need_n_ladder=*/true);

  ExperimentReport report;
  report.kind = "diverging";
  report.noise_floor = 1.36 * std::sqrt(2.0 / spec.mc_reps);
  std::uint64_t cell = 0;
  for (int p : spec.p_ladder) {
    if (p < 3) throw domain_error("p ladder entries must be >= 3");
    GeneratorSpec gen = spec.generator;
    // Rebuild the covariance at this dimension, keeping kind and parameter.
    switch (gen.covariance.kind()) {
      case CovKind::identity:
        gen.covariance = CovarianceModel::identity(p);
        break;
      case CovKind::equicorrelated:
        gen.covariance = CovarianceModel::equicorrelated(p, gen.covariance.param());
        break;
      case CovKind::ar1:
        gen.covariance = CovarianceModel::ar1(p, gen.covariance.param());
        break;
      case CovKind::explicit_matrix:
        if (gen.covariance.dim() != p) {
          throw domain_error(
              "explicit covariance cannot be resized along a p ladder");
        }
        break;
    }
    const int k = spec.kappa.kappa_for(p);
    for (int n : spec.n_ladder) {
      const std::vector<double> xs = draw_data_stats(
          gen, n, k, 0, spec.seed, cell, spec.mc_reps, spec.threads);
      const std::vector<double> ys =
          draw_gaussian_stats(gen, n, k, 0, spec.side, spec.seed, cell,
                              spec.mc_reps, spec.threads);
      CellResult res;
      res.n = n;
      res.p = p;
      res.kappa_or_d = k;
      res.estimate = ks_distance(xs, ys);
      res.mc_se = ks_cell_se(res.estimate, spec.mc_reps);
      res.regime_lhs = regime_lhs_diverging(gen, n, spec.kappa.lambda_exp);
      res.regime_label =
          gen.regime() == MomentRegime::e1 ? "S.1'" : "S.2'";
      res.regime_ok = res.regime_lhs <= spec.C2 * std::pow(n, -spec.c2);
      res.cell_seed = derive_key(spec.seed, StreamTag::data, cell);
      report.cells.push_back(res);
      ++cell;
    }
  }
  return report;
}

FunctionalComparisonReport functional_comparison(const DecayExperimentSpec& spec,
                                                 const TestFunctional& g,
                                                 double beta, double u,
                                                 double gamma) {
  check_spec(spec, /*need_n_ladder=*/true);
  if (!(u > 0.0)) throw domain_error("u must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) throw domain_error("gamma must lie in (0,1)");
  if (!std::isfinite(g.G0)) {
    throw domain_error("functional comparison needs a bounded test function "
                       "(finite G0); '" + g.label + "' is unbounded");
  }
  const int n = spec.n_ladder.front();
  const int p = spec.generator.covariance.dim();
  const int k = spec.kappa.kappa_for(p);
  const double b = beta > 0.0 ? beta : default_beta(p, n);
  const int d = spec.d > 0 ? spec.d : 1;

  // Moment estimates from one dedicated dataset.
  GeneratorSpec moment_gen = spec.generator;
  moment_gen.seed = derive_key(spec.seed, StreamTag::data, 0xB00);
  const SampleMatrix moments_data = sample_data_rep(moment_gen, n, 0);
  const MomentSummary moments = moment_summary(
      moments_data, {u}, {gamma}, spec.generator.covariance.matrix(),
      {200, derive_key(spec.seed, StreamTag::resample, 1)});
  const double phi_u = moments.phi_of_u.count(u) ? moments.phi_of_u.at(u) : 0.0;

  const double root_n = std::sqrt(static_cast<double>(n));
  FunctionalComparisonReport rep;
  rep.g_label = g.label;
  rep.beta = b;
  rep.u = u;
  rep.gamma = gamma;
  rep.gate_value = 2.0 * std::sqrt(2.0) * u * moments.M2 * b / root_n;
  rep.gate_ok = rep.gate_value <= 1.0;

  // Expectation difference for g(F_k(.)).
  std::vector<double> gx(static_cast<std::size_t>(spec.mc_reps));
  std::vector<double> gy(static_cast<std::size_t>(spec.mc_reps));
  std::vector<double> gx2(static_cast<std::size_t>(spec.mc_reps));
  std::vector<double> gy2(static_cast<std::size_t>(spec.mc_reps));
  parallel_for(spec.mc_reps, spec.threads, [&](std::int64_t rep_i) {
    GeneratorSpec local = spec.generator;
    local.seed = derive_key(spec.seed, StreamTag::data, 1);
    const SampleMatrix data =
        sample_data_rep(local, n, static_cast<std::uint64_t>(rep_i));
    const Eigen::VectorXd x = rescaled_sum(data);
    const std::span<const double> xv(x.data(), static_cast<std::size_t>(p));
    gx[static_cast<std::size_t>(rep_i)] = g.fn(smooth_kth(xv, k, b));
    Eigen::VectorXd xsq = x.cwiseProduct(x);
    const std::span<const double> xs(xsq.data(), static_cast<std::size_t>(p));
    gx2[static_cast<std::size_t>(rep_i)] =
        g.fn(smooth_top_k_sum(xs, d, b).value);

    RngStream stream(derive_key(spec.seed, StreamTag::gaussian, 1),
                     StreamTag::gaussian, static_cast<std::uint64_t>(rep_i));
    const Eigen::VectorXd y = spec.generator.covariance.sample(stream);
    const std::span<const double> yv(y.data(), static_cast<std::size_t>(p));
    gy[static_cast<std::size_t>(rep_i)] = g.fn(smooth_kth(yv, k, b));
    Eigen::VectorXd ysq = y.cwiseProduct(y);
    const std::span<const double> ys2(ysq.data(), static_cast<std::size_t>(p));
    gy2[static_cast<std::size_t>(rep_i)] =
        g.fn(smooth_top_k_sum(ys2, d, b).value);
  });

  auto mean_var = [](const std::vector<double>& v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    var /= std::max<double>(v.size() - 1, 1.0);
    return std::pair<double, double>(m, var);
  };
  const auto [mx, vx] = mean_var(gx);
  const auto [my, vy] = mean_var(gy);
  rep.mean_x = mx;
  rep.mean_y = my;
  rep.abs_diff = std::fabs(mx - my);
  rep.mc_se = std::sqrt(vx / spec.mc_reps + vy / spec.mc_reps);

  const auto [mx2, vx2] = mean_var(gx2);
  const auto [my2, vy2] = mean_var(gy2);
  rep.square_abs_diff = std::fabs(mx2 - my2);
  rep.square_mc_se = std::sqrt(vx2 / spec.mc_reps + vy2 / spec.mc_reps);

  // Rate functional for the coordinate comparison.
  const double m3_cubed = std::pow(moments.M3, 3.0);
  rep.D_n = (g.G3 + g.G2 * b + g.G1 * b * b) * m3_cubed / root_n +
            (g.G2 + b * g.G1) * moments.M2 * moments.M2 * phi_u +
            g.G1 * moments.M2 * phi_u * std::sqrt(std::log(p / gamma)) +
            g.G0 * gamma;
  rep.ratio = rep.D_n > 0.0 ? rep.abs_diff / rep.D_n : 0.0;

  // Sub-Weibull constant for the square-sum rate functional.
  {
    std::vector<double> pooled;
    pooled.reserve(static_cast<std::size_t>(moments_data.n()) *
                   static_cast<std::size_t>(p));
    const Eigen::MatrixXd& md = moments_data.data();
    for (int i = 0; i < md.rows(); ++i) {
      for (int j = 0; j < md.cols(); ++j) pooled.push_back(md(i, j));
    }
    int q_max = 2;
    while (q_max < 8 &&
           static_cast<double>(pooled.size()) >= 100.0 * std::pow(2.0, q_max + 1)) {
      ++q_max;
    }
    rep.K2_hat =
        subweibull_probe(pooled, spec.generator.varsigma(), q_max).K2_hat;
  }
  const double k2b = rep.K2_hat + 1.0 / b;
  const double pd = static_cast<double>(p);
  const double m2sq = moments.M2 * moments.M2;
  rep.D_hat_n =
      g.G0 * gamma +
      g.G1 * rep.K2_hat * pd * moments.M2 * phi_u * std::sqrt(std::log(p / gamma)) +
      m2sq * phi_u *
          (g.G2 * pd * pd * k2b * k2b + g.G1 * d +
           g.G1 * d * b * pd * pd * k2b * k2b) +
      m3_cubed / root_n *
          (g.G3 * pd * pd * pd * k2b * k2b * k2b +
           g.G2 * d * b * k2b * k2b * k2b + g.G2 * pd * k2b +
           g.G1 * d * b * pd * k2b +
           g.G1 * d * b * b * pd * pd * pd * k2b * k2b * k2b);
  return rep;
}

}  // namespace topkboot
