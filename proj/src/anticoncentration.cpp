#include "topkboot/anticoncentration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "topkboot/core_stats.hpp"
#include "topkboot/errors.hpp"
#include "topkboot/parallel.hpp"

namespace topkboot {

namespace {

double eval_stat(const Eigen::VectorXd& y, const StatSelector& stat) {
  const std::span<const double> view(y.data(), static_cast<std::size_t>(y.size()));
  if (stat.kind == StatSelector::Kind::kth_largest) {
    return kth_largest(view, stat.index);
  }
  return square_sum_top_d(view, stat.index);
}

std::vector<double> draw_stats(const CovarianceModel& model,
                               const StatSelector& stat, long draws,
                               std::uint64_t seed, int threads) {
  if (draws < 1) throw domain_error("draw count must be >= 1");
  const int p = model.dim();
  if (stat.index < 1 || stat.index > p) {
    throw domain_error("statistic index out of [1, p]");
  }
  std::vector<double> out(static_cast<std::size_t>(draws));
  parallel_for(draws, threads, [&](std::int64_t r) {
    RngStream stream(seed, StreamTag::gaussian, static_cast<std::uint64_t>(r));
    const Eigen::VectorXd y = model.sample(stream);
    out[static_cast<std::size_t>(r)] = eval_stat(y, stat);
  });
  return out;
}

// Max mass of a closed window [v, v + width] over sorted draws.
struct WindowScan {
  double mass = 0.0;
  double left_edge = 0.0;
};

WindowScan max_window_mass(const std::vector<double>& sorted, double width) {
  WindowScan best;
  std::size_t hi = 0;
  for (std::size_t lo = 0; lo < sorted.size(); ++lo) {
    if (hi < lo) hi = lo;
    while (hi + 1 < sorted.size() && sorted[hi + 1] <= sorted[lo] + width) ++hi;
    const double mass =
        static_cast<double>(hi - lo + 1) / static_cast<double>(sorted.size());
    if (mass > best.mass) {
      best.mass = mass;
      best.left_edge = sorted[lo];
    }
  }
  return best;
}

double fit_loglog_slope(const std::vector<double>& xs,
                        const std::vector<double>& ys) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int m = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) continue;
    const double lx = std::log(xs[i]);
    const double ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  if (m < 2) return 0.0;
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace

std::vector<LevyEstimate> levy_concentration(const CovarianceModel& model,
                                             const StatSelector& stat,
                                             const std::vector<double>& eps_list,
                                             long draws, std::uint64_t seed,
                                             int threads) {
  if (eps_list.empty()) throw domain_error("epsilon list must be nonempty");
  for (double e : eps_list) {
    if (!(e > 0.0)) throw domain_error("epsilon must be positive");
  }
  std::vector<double> values = draw_stats(model, stat, draws, seed, threads);
  std::sort(values.begin(), values.end());

  std::vector<LevyEstimate> out;
  out.reserve(eps_list.size());
  for (double eps : eps_list) {
    const WindowScan scan = max_window_mass(values, 2.0 * eps);
    LevyEstimate est;
    est.epsilon = eps;
    est.value = scan.mass;
    est.center_star = scan.left_edge + eps;
    est.draws = draws;
    est.mc_se = std::sqrt(std::max(scan.mass * (1.0 - scan.mass),
                                   1.0 / static_cast<double>(draws)) /
                          static_cast<double>(draws));
    out.push_back(est);
  }
  return out;
}

GaussianMaxReport gaussian_max_expectations(const CovarianceModel& model,
                                            long draws, std::uint64_t seed,
                                            int threads) {
  if (draws < 1) throw domain_error("draw count must be >= 1");
  const int p = model.dim();
  Eigen::VectorXd sd = model.matrix().diagonal().cwiseSqrt();
  for (int j = 0; j < p; ++j) {
    if (!(sd[j] > 0.0)) {
      throw domain_error("all variances must be positive for the max scan");
    }
  }
  std::vector<double> maxima(static_cast<std::size_t>(draws));
  std::vector<double> abs_maxima(static_cast<std::size_t>(draws));
  parallel_for(draws, threads, [&](std::int64_t r) {
    RngStream stream(seed, StreamTag::gaussian, static_cast<std::uint64_t>(r));
    const Eigen::VectorXd y = model.sample(stream);
    double best = -1e300;
    double best_abs = 0.0;
    for (int j = 0; j < p; ++j) {
      const double z = y[j] / sd[j];
      best = std::max(best, z);
      best_abs = std::max(best_abs, std::fabs(z));
    }
    maxima[static_cast<std::size_t>(r)] = best;
    abs_maxima[static_cast<std::size_t>(r)] = best_abs;
  });

  auto mean_se = [](const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= std::max(n - 1.0, 1.0);
    return std::pair<double, double>(mean, std::sqrt(var / n));
  };

  GaussianMaxReport rep;
  rep.draws = draws;
  std::tie(rep.a_p, rep.se_a) = mean_se(maxima);
  std::tie(rep.a_bar_p, rep.se_a_bar) = mean_se(abs_maxima);
  rep.bound_a = std::sqrt(2.0 * std::log(static_cast<double>(p)));
  rep.bound_a_bar = 2.0 * std::sqrt(std::log(static_cast<double>(p)));
  return rep;
}

double GaussianPairSpec::sigma_gap() const {
  if (sigma_u.dim() != sigma_v.dim()) {
    throw domain_error("paired covariances must share a dimension");
  }
  return (sigma_u.matrix() - sigma_v.matrix()).cwiseAbs().maxCoeff();
}

GaussianPairReport gaussian_pair_comparison(const GaussianPairSpec& pair,
                                            const KappaSpec& kappa, long draws,
                                            std::uint64_t seed, bool coupled,
                                            int threads, double bound_constant) {
  if (draws < 1) throw domain_error("draw count must be >= 1");
  const int p = pair.sigma_u.dim();
  if (pair.sigma_v.dim() != p) {
    throw domain_error("paired covariances must share a dimension");
  }
  const int k = kappa.kappa_for(p);
  const double base_gap = pair.sigma_gap();

  GaussianPairReport rep;
  rep.p = p;
  rep.kappa = k;
  rep.coupled = coupled;

  const Eigen::MatrixXd& sig_v = pair.sigma_v.matrix();
  const Eigen::MatrixXd diff = pair.sigma_u.matrix() - sig_v;

  // Diagonal bounds on the reference law; the comparison ceiling assumes
  // the variances stay inside a fixed positive band.
  Eigen::VectorXd sd_v = sig_v.diagonal().cwiseSqrt();
  rep.sigma_min = sd_v.minCoeff();
  rep.sigma_max = sd_v.maxCoeff();
  if (!(rep.sigma_min > 0.0)) {
    throw domain_error("pair comparison needs positive reference variances");
  }

  for (int t = 0; t < 3; ++t) {
    const double shrink = std::pow(10.0, -t);
    const CovarianceModel model_u =
        t == 0 ? pair.sigma_u
               : CovarianceModel::from_matrix(sig_v + shrink * diff);
    const Eigen::MatrixXd& fac_u = model_u.factor();
    const Eigen::MatrixXd& fac_v = pair.sigma_v.factor();

    std::vector<double> u_stats(static_cast<std::size_t>(draws));
    std::vector<double> v_stats(static_cast<std::size_t>(draws));
    std::vector<double> v_scaled_max(static_cast<std::size_t>(draws));
    parallel_for(draws, threads, [&](std::int64_t r) {
      const auto idx = static_cast<std::size_t>(r);
      RngStream stream_u(seed, StreamTag::gaussian, static_cast<std::uint64_t>(t),
                         static_cast<std::uint64_t>(r));
      Eigen::VectorXd g(p);
      for (int j = 0; j < p; ++j) g[j] = stream_u.next_normal();
      const Eigen::VectorXd u = fac_u * g;
      u_stats[idx] = kth_largest(
          std::span<const double>(u.data(), static_cast<std::size_t>(p)), k);
      if (!coupled) {
        RngStream stream_v(seed, StreamTag::gaussian,
                           1000 + static_cast<std::uint64_t>(t),
                           static_cast<std::uint64_t>(r));
        for (int j = 0; j < p; ++j) g[j] = stream_v.next_normal();
      }
      const Eigen::VectorXd v = fac_v * g;
      v_stats[idx] = kth_largest(
          std::span<const double>(v.data(), static_cast<std::size_t>(p)), k);
      double worst = 0.0;
      for (int j = 0; j < p; ++j) {
        worst = std::max(worst, std::fabs(v[j]) / sd_v[j]);
      }
      v_scaled_max[idx] = worst;
    });
    if (t == 0) {
      double acc = 0.0;
      for (double w : v_scaled_max) acc += w;
      rep.a_bar_p_hat = acc / static_cast<double>(draws);
    }

    PairLadderCell cell;
    cell.gap = base_gap * shrink;
    cell.ks = ks_distance(u_stats, v_stats);
    if (cell.gap > 0.0) {
      const double lp = std::log(static_cast<double>(p));
      const double mid = std::max(
          {1.0, rep.a_bar_p_hat * rep.a_bar_p_hat, std::log(1.0 / cell.gap)});
      cell.bound = bound_constant * k * k * std::cbrt(cell.gap) *
                   std::cbrt(mid) * std::cbrt(lp);
      cell.verdict = cell.ks <= cell.bound ? "ok" : "exceeded";
    } else {
      cell.bound = 0.0;
      cell.verdict = "identical";
    }
    if (coupled) {
      // SE from the discordance rate at the achieved supremum: with shared
      // draws the indicator difference is nonzero only when the window
      // between the two coupled values straddles the argmax threshold.
      // The KS value itself bounds the mean discordance from below; use a
      // conservative rate of twice the KS value.
      const double rate = std::min(1.0, 2.0 * cell.ks + 1.0 / draws);
      cell.mc_se = std::sqrt(rate / static_cast<double>(draws));
    } else {
      cell.mc_se = 1.36 * std::sqrt(2.0 / static_cast<double>(draws));
    }
    rep.ladder.push_back(cell);
  }

  std::vector<double> gaps, kss;
  for (const auto& cell : rep.ladder) {
    gaps.push_back(cell.gap);
    kss.push_back(cell.ks);
  }
  rep.loglog_slope = fit_loglog_slope(gaps, kss);
  return rep;
}

double log_binomial(int p, int d) {
  if (d < 0 || d > p) throw domain_error("binomial index out of range");
  return std::lgamma(p + 1.0) - std::lgamma(d + 1.0) - std::lgamma(p - d + 1.0);
}

SquareSumAnticoncReport square_sum_anticoncentration(
    const CovarianceModel& model, int d, const std::vector<double>& eps_list,
    long draws, std::uint64_t seed, const SquareSumOptions& opts) {
  const int p = model.dim();
  if (d < 1 || d > p) throw domain_error("d out of [1, p]");
  if (eps_list.empty()) throw domain_error("epsilon list must be nonempty");

  double bound_scale = 0.0;
  bool bound_applies = d >= 2;
  if (bound_applies) {
    const Eigen::VectorXd& lam = model.spectrum();
    int positive = 0;
    for (int j = 0; j < p; ++j) {
      if (lam[j] > opts.eigen_floor) ++positive;
    }
    if (positive < p - d + 2) {
      throw capability_error(
          "square-sum anti-concentration needs at least p-d+2 = " +
          std::to_string(p - d + 2) + " positive eigenvalues; found " +
          std::to_string(positive));
    }
    const double lam_d = lam[d - 1];        // d-th smallest (ascending, 1-based)
    const double lam_dm1 = lam[d - 2];      // (d-1)-th smallest
    if (!(lam_dm1 > opts.eigen_floor)) {
      throw capability_error(
          "eigenvalue lambda_(d-1) = " + std::to_string(lam_dm1) +
          " is below the configured floor " + std::to_string(opts.eigen_floor));
    }
    bound_scale = opts.bound_constant *
                  std::exp(log_binomial(p, d)) / std::sqrt(lam_d * lam_dm1);
  }

  std::vector<double> values =
      draw_stats(model, StatSelector::square_sum(d), draws, seed, opts.threads);
  std::sort(values.begin(), values.end());

  SquareSumAnticoncReport rep;
  rep.p = p;
  rep.d = d;
  std::vector<double> eps_pos, mass_pos;
  for (double eps : eps_list) {
    if (!(eps > 0.0)) throw domain_error("epsilon must be positive");
    const WindowScan scan = max_window_mass(values, eps);
    SquareSumWindowCell cell;
    cell.epsilon = eps;
    cell.mass = scan.mass;
    cell.mc_se = std::sqrt(std::max(scan.mass * (1.0 - scan.mass),
                                    1.0 / static_cast<double>(draws)) /
                           static_cast<double>(draws));
    if (bound_applies) {
      cell.bound = bound_scale * eps;
      cell.verdict = cell.mass <= cell.bound + 3.0 * cell.mc_se ? "ok" : "exceeded";
    } else {
      cell.bound = 0.0;
      cell.verdict = "not-applicable";
    }
    rep.cells.push_back(cell);
    eps_pos.push_back(eps);
    mass_pos.push_back(scan.mass);
  }
  rep.loglog_slope = fit_loglog_slope(eps_pos, mass_pos);
  return rep;
}

}  // namespace topkboot
