#include "topkboot/harness.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "topkboot/core_stats.hpp"
#include "topkboot/errors.hpp"
#include "topkboot/report_io.hpp"
#include "topkboot/version.hpp"

namespace topkboot {

namespace {

using nlohmann::json;

const char* kKindNames[] = {
    "rho_kappa",     "rho_d",         "coverage",
    "approx_coverage", "anticoncentration", "gaussian_pair",
    "functional",    "diverging",     "audit_smooth",
};

}  // namespace

ExperimentKind kind_from_string(const std::string& name) {
  for (std::size_t i = 0; i < std::size(kKindNames); ++i) {
    if (name == kKindNames[i]) return static_cast<ExperimentKind>(i);
  }
  throw domain_error("experiment: unknown kind '" + name + "'");
}

std::string kind_to_string(ExperimentKind kind) {
  return kKindNames[static_cast<std::size_t>(kind)];
}

std::vector<CatalogEntry> list_experiments() {
  return {
      {"rho_kappa",
       "Theorem: Gaussian Approximation: Kolmogorov distance between the "
       "k-th largest coordinate of the rescaled sum and of its Gaussian "
       "analog decays along the sample-size ladder"},
      {"rho_d",
       "Theorem: Gaussian Approximation for square sums of the d largest "
       "coordinates"},
      {"coverage",
       "Theorem: Validity of Multiplier Bootstrap for High-Dimensional "
       "Means: conditional quantile coverage of the k-th largest "
       "coordinate"},
      {"approx_coverage",
       "Theorem: Validity of Multiplier Bootstrap for Approximate "
       "High-Dimensional Means: coverage under controlled statistic "
       "perturbations, with the quantile-comparison lemma checked per "
       "replicate"},
      {"anticoncentration",
       "Proposition: Anti-Concentration: Levy concentration of the k-th "
       "largest Gaussian coordinate, plus Lemma: Gaussian Maximal "
       "Inequality ceilings on the scaled max expectations"},
      {"gaussian_pair",
       "Proposition: Comparison of Distributions: distributional gap "
       "between k-th largest coordinates of two Gaussian laws shrinks with "
       "the covariance gap at the cube-root-or-better rate"},
      {"functional",
       "Proposition: Comparison of Gaussian to Non-Gaussian: smooth "
       "expectation differences against the computed rate functional"},
      {"diverging",
       "Theorem: Gaussian Approximation with diverging k: decay along a "
       "dimension ladder with k growing like Lambda p^(1-lambda)"},
      {"audit_smooth",
       "Lemmas: smooth approximation machinery: sandwich, gradient simplex, "
       "Lipschitz, and summed derivative ceilings audited by finite "
       "differences"},
  };
}

namespace {

CovarianceModel parse_covariance(const json& j, const std::string& field) {
  if (!j.is_object()) throw domain_error(field + ": must be an object");
  const std::string kind = j.value("kind", "identity");
  const int p = j.value("p", 0);
  if (p < 1) throw domain_error(field + ".p: must be >= 1");
  if (kind == "identity") return CovarianceModel::identity(p);
  if (kind == "equicorrelated") {
    if (!j.contains("rho")) throw domain_error(field + ".rho: required");
    return CovarianceModel::equicorrelated(p, j.at("rho").get<double>());
  }
  if (kind == "ar1") {
    if (!j.contains("rho")) throw domain_error(field + ".rho: required");
    return CovarianceModel::ar1(p, j.at("rho").get<double>());
  }
  if (kind == "explicit") {
    if (!j.contains("matrix")) throw domain_error(field + ".matrix: required");
    const auto& rows = j.at("matrix");
    Eigen::MatrixXd sigma(p, p);
    if (static_cast<int>(rows.size()) != p) {
      throw domain_error(field + ".matrix: needs p rows");
    }
    for (int r = 0; r < p; ++r) {
      if (static_cast<int>(rows[r].size()) != p) {
        throw domain_error(field + ".matrix: needs p columns per row");
      }
      for (int c = 0; c < p; ++c) sigma(r, c) = rows[r][c].get<double>();
    }
    return CovarianceModel::from_matrix(std::move(sigma));
  }
  throw domain_error(field + ".kind: unknown covariance kind '" + kind + "'");
}

GeneratorSpec parse_generator(const json& j) {
  if (!j.is_object()) throw domain_error("generator: must be an object");
  GeneratorSpec gen;
  gen.family = family_from_string(j.value("family", "gaussian"));
  if (!j.contains("covariance")) {
    throw domain_error("generator.covariance: required");
  }
  gen.covariance = parse_covariance(j.at("covariance"), "generator.covariance");
  gen.student_df = j.value("student_df", 8.0);
  gen.bound = j.value("bound", 0.0);
  if (gen.family == Family::student_t &&
      (gen.student_df <= 4.0 || gen.student_df != std::floor(gen.student_df))) {
    throw domain_error(
        "generator.student_df: must be an integer > 4 so fourth moments are "
        "finite");
  }
  return gen;
}

KappaSpec parse_kappa(const json& j, int p) {
  KappaSpec spec = KappaSpec::fixed(1);
  if (j.is_object()) {
    const std::string mode = j.value("mode", "fixed");
    if (mode == "fixed") {
      spec = KappaSpec::fixed(j.value("value", 1));
    } else if (mode == "diverging") {
      if (!j.contains("Lambda") || !j.contains("lambda_exp")) {
        throw domain_error("kappa: diverging mode needs Lambda and lambda_exp");
      }
      spec = KappaSpec::diverging(j.at("Lambda").get<double>(),
                                  j.at("lambda_exp").get<double>());
    } else {
      throw domain_error("kappa.mode: must be 'fixed' or 'diverging'");
    }
  } else if (j.is_number_integer()) {
    spec = KappaSpec::fixed(j.get<int>());
  } else {
    throw domain_error("kappa: must be an integer or an object");
  }
  if (spec.mode == KappaSpec::Mode::fixed && p >= 1) {
    const int half = (p + 1) / 2;
    if (spec.kappa > half) {
      throw domain_error(
          "kappa.value: kappa = " + std::to_string(spec.kappa) +
          " violates the standing assumption kappa <= floor((p+1)/2) = " +
          std::to_string(half) + " for p = " + std::to_string(p) +
          " (lower order statistics are reached by negating the data)");
    }
  }
  return spec;
}

template <typename T>
std::vector<T> parse_ladder(const json& j, const std::string& field,
                            bool strictly_increasing) {
  std::vector<T> out;
  if (!j.is_array() || j.empty()) {
    throw domain_error(field + ": must be a nonempty array");
  }
  for (const auto& v : j) out.push_back(v.get<T>());
  if (strictly_increasing) {
    for (std::size_t i = 0; i + 1 < out.size(); ++i) {
      if (out[i + 1] <= out[i]) {
        throw domain_error(field + ": must be strictly increasing");
      }
    }
  }
  return out;
}

}  // namespace

RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw domain_error("config: must be a JSON object");
  RunConfig cfg;
  if (!j.contains("experiment")) throw domain_error("experiment: required");
  cfg.kind = kind_from_string(j.at("experiment").get<std::string>());
  cfg.seed = j.value("seed", 1ULL);
  cfg.threads = j.value("threads", 0);
  cfg.out_dir = j.value("out_dir", std::string("out"));

  const bool needs_generator =
      cfg.kind == ExperimentKind::rho_kappa || cfg.kind == ExperimentKind::rho_d ||
      cfg.kind == ExperimentKind::coverage ||
      cfg.kind == ExperimentKind::approx_coverage ||
      cfg.kind == ExperimentKind::functional ||
      cfg.kind == ExperimentKind::diverging;
  if (needs_generator) {
    if (!j.contains("generator")) throw domain_error("generator: required");
    cfg.generator = parse_generator(j.at("generator"));
  } else if (j.contains("generator")) {
    cfg.generator = parse_generator(j.at("generator"));
  } else if (j.contains("covariance")) {
    cfg.generator.covariance = parse_covariance(j.at("covariance"), "covariance");
  } else if (cfg.kind != ExperimentKind::audit_smooth) {
    throw domain_error("covariance: required for this experiment");
  }

  const int p = cfg.generator.covariance.dim();
  if (j.contains("kappa")) {
    cfg.kappa = parse_kappa(j.at("kappa"), p);
  }
  cfg.d = j.value("d", 0);
  if (j.contains("n_ladder")) {
    cfg.n_ladder = parse_ladder<int>(j.at("n_ladder"), "n_ladder", true);
    for (int n : cfg.n_ladder) {
      if (n < 1) throw domain_error("n_ladder: entries must be >= 1");
    }
  }
  if (j.contains("p_ladder")) {
    cfg.p_ladder = parse_ladder<int>(j.at("p_ladder"), "p_ladder", true);
  }
  cfg.mc_reps = j.value("mc_reps", 1000);
  if (cfg.mc_reps < 1) throw domain_error("mc_reps: must be >= 1");
  cfg.bootstrap_replicates = j.value("bootstrap_replicates", 500);
  if (cfg.bootstrap_replicates < 1) {
    throw domain_error("bootstrap_replicates: must be >= 1");
  }
  cfg.gaussian_reps = j.value("gaussian_reps", 100000);
  cfg.draws = j.value("draws", 100000L);
  if (cfg.draws < 1) throw domain_error("draws: must be >= 1");
  if (j.contains("alpha_list")) {
    cfg.alpha_list = parse_ladder<double>(j.at("alpha_list"), "alpha_list", false);
  }
  for (double a : cfg.alpha_list) {
    if (!(a > 0.0 && a < 1.0)) {
      throw domain_error("alpha_list: levels must lie in (0, 1)");
    }
  }
  if (j.contains("epsilon_list")) {
    cfg.epsilon_list =
        parse_ladder<double>(j.at("epsilon_list"), "epsilon_list", false);
  }
  for (double e : cfg.epsilon_list) {
    if (!(e > 0.0)) throw domain_error("epsilon_list: entries must be positive");
  }
  cfg.beta = j.value("beta", 0.0);
  if (cfg.beta < 0.0) throw domain_error("beta: must be >= 0 (0 = default rule)");
  cfg.u = j.value("u", 0.0);
  cfg.gamma = j.value("gamma", 0.05);
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0)) {
    throw domain_error("gamma: must lie in (0, 1)");
  }
  cfg.g_label = j.value("g", std::string("sin"));
  TestFunctional::by_label(cfg.g_label);  // validates
  const std::string side = j.value("gaussian_side", std::string("population"));
  if (side == "population") {
    cfg.side = GaussianSide::population;
  } else if (side == "plugin") {
    cfg.side = GaussianSide::plugin;
  } else {
    throw domain_error("gaussian_side: must be 'population' or 'plugin'");
  }
  cfg.zeta1 = j.value("zeta1", 0.0);
  cfg.zeta2 = j.value("zeta2", 0.0);
  if (cfg.zeta1 < 0.0 || cfg.zeta2 < 0.0) {
    throw domain_error("zeta1/zeta2: must be nonnegative");
  }
  cfg.transform = j.value("transform", std::string("identity"));
  if (cfg.transform != "identity" && cfg.transform != "additive_shift" &&
      cfg.transform != "additive_noise") {
    throw domain_error("transform: must be identity, additive_shift or "
                       "additive_noise");
  }
  if (j.contains("covariance_u")) {
    cfg.covariance_u = parse_covariance(j.at("covariance_u"), "covariance_u");
    if (cfg.covariance_u->dim() != p) {
      throw domain_error("covariance_u: dimension must match covariance");
    }
  }
  cfg.coupled = j.value("coupled", true);
  cfg.audit_points = j.value("audit_points", 20);
  if (cfg.audit_points < 1) throw domain_error("audit_points: must be >= 1");

  if (j.contains("constants")) {
    const auto& c = j.at("constants");
    cfg.C2 = c.value("C2", 1.0);
    cfg.C3 = c.value("C3", 1.0);
    cfg.c2 = c.value("c2", 0.0);
    cfg.slack = c.value("slack", 1.15);
    cfg.bound_constant = c.value("bound_constant", 1.0);
  }

  // Kind-specific requirements.
  switch (cfg.kind) {
    case ExperimentKind::rho_kappa:
    case ExperimentKind::functional:
      if (cfg.n_ladder.empty()) throw domain_error("n_ladder: required");
      break;
    case ExperimentKind::rho_d:
      if (cfg.n_ladder.empty()) throw domain_error("n_ladder: required");
      if (cfg.d < 1) throw domain_error("d: required and >= 1");
      break;
    case ExperimentKind::diverging:
      if (cfg.n_ladder.empty()) throw domain_error("n_ladder: required");
      if (cfg.p_ladder.empty()) throw domain_error("p_ladder: required");
      if (cfg.kappa.mode != KappaSpec::Mode::diverging) {
        throw domain_error("kappa.mode: diverging experiment needs mode = "
                           "'diverging'");
      }
      break;
    case ExperimentKind::coverage:
    case ExperimentKind::approx_coverage:
      if (cfg.n_ladder.empty()) throw domain_error("n_ladder: required");
      break;
    case ExperimentKind::gaussian_pair:
      if (!cfg.covariance_u.has_value()) {
        throw domain_error("covariance_u: required for gaussian_pair");
      }
      break;
    case ExperimentKind::anticoncentration:
    case ExperimentKind::audit_smooth:
      break;
  }

  cfg.echo = j;
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw domain_error(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

std::vector<std::string> validate_config(const json& j) {
  try {
    parse_config(j);
    return {};
  } catch (const std::exception& e) {
    return {e.what()};
  }
}

namespace {

std::string fdouble(double v) { return format_double(v); }

json experiment_cells_json(const ExperimentReport& rep) {
  json cells = json::array();
  for (const auto& c : rep.cells) {
    cells.push_back({{"n", c.n},
                     {"p", c.p},
                     {"kappa_or_d", c.kappa_or_d},
                     {"estimate", c.estimate},
                     {"mc_se", c.mc_se},
                     {"regime_label", c.regime_label},
                     {"regime_lhs", c.regime_lhs},
                     {"regime_ok", c.regime_ok},
                     {"cell_seed", hex64(c.cell_seed)}});
  }
  return cells;
}

CsvTable experiment_cells_csv(const ExperimentReport& rep) {
  CsvTable csv({"n", "p", "kappa_or_d", "estimate", "mc_se", "regime_label",
                "regime_lhs", "regime_flag", "seed"});
  for (const auto& c : rep.cells) {
    csv.add_row({std::to_string(c.n), std::to_string(c.p),
                 std::to_string(c.kappa_or_d), fdouble(c.estimate),
                 fdouble(c.mc_se), c.regime_label, fdouble(c.regime_lhs),
                 c.regime_ok ? "ok" : "out-of-regime", hex64(c.cell_seed)});
  }
  return csv;
}

json coverage_json(const CoverageReport& rep) {
  json cells = json::array();
  for (const auto& c : rep.cells) {
    cells.push_back({{"alpha", c.alpha},
                     {"coverage", c.coverage},
                     {"coverage_error", c.coverage_error},
                     {"binom_se", c.binom_se},
                     {"symdiff", c.symdiff}});
  }
  return {{"n", rep.n},
          {"p", rep.p},
          {"kappa", rep.kappa},
          {"mc_reps", rep.mc_reps},
          {"bootstrap_replicates", rep.replicate_count},
          {"transform", rep.transform},
          {"cells", cells},
          {"rho_ominus", rep.rho_ominus},
          {"delta_theta", rep.delta_theta},
          {"nu_at_theta", rep.nu_at_theta},
          {"ordering_fraction", rep.ordering_fraction},
          {"ap_ordering_fraction", rep.ap_ordering_fraction},
          {"approx_penalty", rep.approx_penalty}};
}

CsvTable coverage_csv(const CoverageReport& rep) {
  CsvTable csv({"alpha", "coverage", "coverage_error", "binom_se", "symdiff"});
  for (const auto& c : rep.cells) {
    csv.add_row({fdouble(c.alpha), fdouble(c.coverage), fdouble(c.coverage_error),
                 fdouble(c.binom_se), fdouble(c.symdiff)});
  }
  return csv;
}

struct KindOutputs {
  CsvTable csv{std::vector<std::string>{}};
  json results;
};

KindOutputs execute(const RunConfig& cfg) {
  KindOutputs out;
  switch (cfg.kind) {
    case ExperimentKind::rho_kappa:
    case ExperimentKind::rho_d:
    case ExperimentKind::diverging: {
      DecayExperimentSpec spec;
      spec.generator = cfg.generator;
      spec.generator.seed = cfg.seed;
      spec.n_ladder = cfg.n_ladder;
      spec.p_ladder = cfg.p_ladder;
      spec.kappa = cfg.kappa;
      spec.d = cfg.kind == ExperimentKind::rho_d ? cfg.d : 0;
      spec.mc_reps = cfg.mc_reps;
      spec.seed = cfg.seed;
      spec.side = cfg.side;
      spec.beta = cfg.beta;
      spec.C2 = cfg.C2;
      spec.c2 = cfg.c2;
      spec.threads = cfg.threads;
      ExperimentReport rep;
      if (cfg.kind == ExperimentKind::rho_kappa) {
        rep = rho_kappa_experiment(spec);
      } else if (cfg.kind == ExperimentKind::rho_d) {
        rep = rho_d_square_experiment(spec);
      } else {
        rep = diverging_kappa_experiment(spec);
      }
      out.csv = experiment_cells_csv(rep);
      out.results = {{"kind", rep.kind},
                     {"noise_floor", rep.noise_floor},
                     {"cells", experiment_cells_json(rep)}};
      break;
    }
    case ExperimentKind::coverage:
    case ExperimentKind::approx_coverage: {
      CoverageOptions opts;
      opts.gaussian_reps = cfg.gaussian_reps;
      opts.C2 = cfg.C2;
      opts.C3 = cfg.C3;
      opts.threads = cfg.threads;
      const int n = cfg.n_ladder.front();
      CoverageReport rep;
      if (cfg.kind == ExperimentKind::coverage) {
        rep = coverage_experiment(cfg.generator, n, cfg.kappa, cfg.alpha_list,
                                  cfg.mc_reps, cfg.bootstrap_replicates,
                                  cfg.seed, opts);
      } else {
        ApproxStatSpec approx = ApproxStatSpec::identity();
        if (cfg.transform == "additive_shift") {
          approx = ApproxStatSpec::additive_shift(cfg.zeta1, cfg.zeta2);
        } else if (cfg.transform == "additive_noise") {
          approx = ApproxStatSpec::additive_noise(cfg.zeta1, cfg.zeta2);
        }
        rep = approx_stat_experiment(approx, cfg.generator, n, cfg.kappa,
                                     cfg.alpha_list, cfg.mc_reps,
                                     cfg.bootstrap_replicates, cfg.seed, opts);
      }
      out.csv = coverage_csv(rep);
      out.results = coverage_json(rep);
      break;
    }
    case ExperimentKind::anticoncentration: {
      const CovarianceModel& model = cfg.generator.covariance;
      const int p = model.dim();
      const auto max_rep = gaussian_max_expectations(
          model, cfg.draws, derive_key(cfg.seed, StreamTag::gaussian, 1),
          cfg.threads);
      const int k = cfg.kappa.kappa_for(p);
      const auto levy = levy_concentration(
          model, StatSelector::kth(k), cfg.epsilon_list, cfg.draws,
          derive_key(cfg.seed, StreamTag::gaussian, 2), cfg.threads);
      // Equal-variance ceiling 4 k eps (a_p + 1) / sigma when it applies.
      const Eigen::VectorXd diag = model.matrix().diagonal();
      const bool equal_var =
          (diag.maxCoeff() - diag.minCoeff()) <= 1e-12 * diag.maxCoeff();
      const double sigma = std::sqrt(diag[0]);
      CsvTable csv({"epsilon", "estimate", "mc_se", "bound", "verdict"});
      json cells = json::array();
      for (const auto& est : levy) {
        double bound = 0.0;
        std::string verdict = "not-applicable";
        if (equal_var) {
          bound = 4.0 * k * est.epsilon * (max_rep.a_p + 1.0) / sigma;
          verdict = est.value <= bound + 3.0 * est.mc_se ? "ok" : "exceeded";
        }
        csv.add_row({fdouble(est.epsilon), fdouble(est.value), fdouble(est.mc_se),
                     fdouble(bound), verdict});
        cells.push_back({{"epsilon", est.epsilon},
                         {"estimate", est.value},
                         {"mc_se", est.mc_se},
                         {"center_star", est.center_star},
                         {"bound", bound},
                         {"verdict", verdict}});
      }
      out.csv = std::move(csv);
      out.results = {{"kappa", k},
                     {"levy", cells},
                     {"a_p", max_rep.a_p},
                     {"a_p_se", max_rep.se_a},
                     {"a_p_bound", max_rep.bound_a},
                     {"a_bar_p", max_rep.a_bar_p},
                     {"a_bar_p_se", max_rep.se_a_bar},
                     {"a_bar_p_bound", max_rep.bound_a_bar}};
      break;
    }
    case ExperimentKind::gaussian_pair: {
      GaussianPairSpec pair{*cfg.covariance_u, cfg.generator.covariance};
      const auto rep =
          gaussian_pair_comparison(pair, cfg.kappa, cfg.draws, cfg.seed,
                                   cfg.coupled, cfg.threads, cfg.C2);
      CsvTable csv({"gap", "ks", "mc_se", "bound", "verdict"});
      json cells = json::array();
      for (const auto& cell : rep.ladder) {
        csv.add_row({fdouble(cell.gap), fdouble(cell.ks), fdouble(cell.mc_se),
                     fdouble(cell.bound), cell.verdict});
        cells.push_back({{"gap", cell.gap},
                         {"ks", cell.ks},
                         {"mc_se", cell.mc_se},
                         {"bound", cell.bound},
                         {"verdict", cell.verdict}});
      }
      out.csv = std::move(csv);
      out.results = {{"kappa", rep.kappa},
                     {"coupled", rep.coupled},
                     {"sigma_min", rep.sigma_min},
                     {"sigma_max", rep.sigma_max},
                     {"a_bar_p_hat", rep.a_bar_p_hat},
                     {"ladder", cells},
                     {"loglog_slope", rep.loglog_slope}};
      break;
    }
    case ExperimentKind::functional: {
      DecayExperimentSpec spec;
      spec.generator = cfg.generator;
      spec.n_ladder = cfg.n_ladder;
      spec.kappa = cfg.kappa;
      spec.d = cfg.d;
      spec.mc_reps = cfg.mc_reps;
      spec.seed = cfg.seed;
      spec.threads = cfg.threads;
      const int n = cfg.n_ladder.front();
      const int p = cfg.generator.covariance.dim();
      const double beta = cfg.beta > 0.0 ? cfg.beta : default_beta(p, n);
      double u = cfg.u;
      if (!(u > 0.0)) {
        // Envelope default: the sample-estimated u(gamma).
        GeneratorSpec probe_gen = cfg.generator;
        probe_gen.seed = derive_key(cfg.seed, StreamTag::data, 0xCAFE);
        const SampleMatrix probe = sample_data_rep(probe_gen, n, 0);
        const auto ms = moment_summary(probe, {1.0}, {cfg.gamma}, std::nullopt,
                                       {200, derive_key(cfg.seed, StreamTag::resample, 2)});
        u = ms.u_of_gamma.at(cfg.gamma);
      }
      const auto rep = functional_comparison(
          spec, TestFunctional::by_label(cfg.g_label), beta, u, cfg.gamma);
      CsvTable csv({"g", "beta", "u", "gamma", "abs_diff", "mc_se", "D_n",
                    "ratio", "gate_value", "gate_flag", "square_abs_diff",
                    "square_mc_se", "D_hat_n", "K2_hat"});
      csv.add_row({rep.g_label, fdouble(rep.beta), fdouble(rep.u),
                   fdouble(rep.gamma), fdouble(rep.abs_diff), fdouble(rep.mc_se),
                   fdouble(rep.D_n), fdouble(rep.ratio), fdouble(rep.gate_value),
                   rep.gate_ok ? "in-regime" : "out-of-regime",
                   fdouble(rep.square_abs_diff), fdouble(rep.square_mc_se),
                   fdouble(rep.D_hat_n), fdouble(rep.K2_hat)});
      out.csv = std::move(csv);
      out.results = {{"g", rep.g_label},
                     {"beta", rep.beta},
                     {"u", rep.u},
                     {"gamma", rep.gamma},
                     {"mean_x", rep.mean_x},
                     {"mean_y", rep.mean_y},
                     {"abs_diff", rep.abs_diff},
                     {"mc_se", rep.mc_se},
                     {"D_n", rep.D_n},
                     {"ratio", rep.ratio},
                     {"gate_value", rep.gate_value},
                     {"gate_ok", rep.gate_ok},
                     {"square_abs_diff", rep.square_abs_diff},
                     {"square_mc_se", rep.square_mc_se},
                     {"D_hat_n", rep.D_hat_n},
                     {"K2_hat", rep.K2_hat}};
      break;
    }
    case ExperimentKind::audit_smooth: {
      const int p = cfg.generator.covariance.dim() >= 2
                        ? std::min(cfg.generator.covariance.dim(), 12)
                        : 5;
      const int k = std::min(cfg.kappa.kappa_for(p), p - 1);
      const double beta = cfg.beta > 0.0 ? cfg.beta : 10.0;
      CsvTable csv({"point", "check", "value", "bound", "pass"});
      json cells = json::array();
      bool all_ok = true;
      for (int i = 0; i < cfg.audit_points; ++i) {
        RngStream stream(cfg.seed, StreamTag::scan,
                         static_cast<std::uint64_t>(i));
        std::vector<double> x(static_cast<std::size_t>(p));
        std::vector<double> z(static_cast<std::size_t>(p));
        for (int jdx = 0; jdx < p; ++jdx) {
          x[static_cast<std::size_t>(jdx)] = 2.0 * stream.next_normal();
          z[static_cast<std::size_t>(jdx)] = 2.0 * stream.next_normal();
        }
        const double exact = top_k_sum(x, k);
        const auto smooth = smooth_top_k_sum(x, k, beta);
        const double gap = exact - smooth.value;
        const double budget = capacity_value(p, k) / beta;
        const bool sandwich_ok = gap >= -1e-9 && gap <= budget + 1e-9;
        csv.add_row({std::to_string(i), "sandwich", fdouble(gap),
                     fdouble(budget), sandwich_ok ? "pass" : "fail"});

        const auto grad = grad_smooth_kth(x, std::max(k, 1), beta);
        double gsum = 0.0;
        double gmin = 1.0;
        for (double gv : grad) {
          gsum += gv;
          gmin = std::min(gmin, gv);
        }
        const bool simplex_ok = std::fabs(gsum - 1.0) <= 1e-8 && gmin >= -1e-12;
        csv.add_row({std::to_string(i), "gradient_simplex", fdouble(gsum),
                     fdouble(1.0), simplex_ok ? "pass" : "fail"});

        const double lip = lipschitz_ratio(x, z, std::max(k, 1), beta);
        const bool lip_ok = lip <= 1.0 + 1e-10;
        csv.add_row({std::to_string(i), "lipschitz", fdouble(lip), fdouble(1.0),
                     lip_ok ? "pass" : "fail"});
        all_ok = all_ok && sandwich_ok && simplex_ok && lip_ok;
        cells.push_back({{"point", i},
                         {"sandwich_gap", gap},
                         {"sandwich_budget", budget},
                         {"grad_sum", gsum},
                         {"lipschitz_ratio", lip}});
      }
      // One derivative-bound audit at a fresh point (p <= 12 enforced).
      {
        RngStream stream(cfg.seed, StreamTag::scan, 0xFFFF);
        std::vector<double> x(static_cast<std::size_t>(std::min(p, 6)));
        for (auto& v : x) v = stream.next_normal();
        const int kk = std::min(k, static_cast<int>(x.size()) - 1);
        const auto audit = derivative_bound_audit(
            x, std::max(kk, 1), beta, TestFunctional::by_label(cfg.g_label),
            {cfg.slack, 0.0});
        csv.add_row({"audit", "second_derivative_sum",
                     fdouble(audit.sum_abs_second), fdouble(audit.second_bound),
                     audit.second_ok ? "pass" : "fail"});
        csv.add_row({"audit", "third_derivative_sum",
                     fdouble(audit.sum_abs_third), fdouble(audit.third_bound),
                     audit.third_ok ? "pass" : "fail"});
        all_ok = all_ok && audit.second_ok && audit.third_ok;
        cells.push_back({{"point", "audit"},
                         {"sum_abs_second", audit.sum_abs_second},
                         {"second_bound", audit.second_bound},
                         {"sum_abs_third", audit.sum_abs_third},
                         {"third_bound", audit.third_bound},
                         {"stability_ratio", audit.stability_ratio}});
      }
      out.csv = std::move(csv);
      out.results = {{"p", p}, {"kappa", k}, {"beta", beta},
                     {"all_ok", all_ok}, {"points", cells}};
      break;
    }
  }
  return out;
}

}  // namespace

RunResult run_experiment(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  RunResult result;
  const std::string started = iso8601_now();

  KindOutputs outputs = execute(cfg);

  fs::create_directories(cfg.out_dir);
  const std::string csv_path = cfg.out_dir + "/cells.csv";
  outputs.csv.write(csv_path);
  result.outputs.push_back(csv_path);

  json summary;
  summary["experiment"] = kind_to_string(cfg.kind);
  summary["version"] = kVersion;
  summary["seed"] = cfg.seed;
  summary["config"] = cfg.echo;
  summary["results"] = outputs.results;
  const std::string summary_path = cfg.out_dir + "/summary.json";
  write_text_file(summary_path, summary.dump(2) + "\n");
  result.outputs.push_back(summary_path);

  json manifest;
  manifest["config_hash"] = hex64(fnv1a_hash(cfg.echo.dump()));
  manifest["version"] = kVersion;
  manifest["started_at"] = started;
  manifest["finished_at"] = iso8601_now();
  manifest["master_seed"] = cfg.seed;
  json cell_seeds = json::array();
  const std::size_t n_cells =
      cfg.kind == ExperimentKind::diverging
          ? cfg.p_ladder.size() * cfg.n_ladder.size()
          : std::max<std::size_t>(cfg.n_ladder.size(), 1);
  for (std::size_t c = 0; c < n_cells; ++c) {
    cell_seeds.push_back(hex64(derive_key(cfg.seed, StreamTag::data, c)));
  }
  manifest["cell_seeds"] = cell_seeds;
  manifest["outputs"] = result.outputs;
  const std::string manifest_path = cfg.out_dir + "/manifest.json";
  write_text_file(manifest_path, manifest.dump(2) + "\n");
  result.outputs.push_back(manifest_path);

  result.summary = std::move(summary);
  result.exit_code = 0;
  return result;
}

RunResult run_config_file(const std::string& path,
                          const std::optional<std::uint64_t>& seed_override,
                          const std::optional<int>& threads_override,
                          const std::optional<std::string>& out_override) {
  RunResult result;
  try {
    RunConfig cfg = parse_config_file(path);
    if (seed_override) {
      cfg.seed = *seed_override;
      cfg.echo["seed"] = *seed_override;
    }
    if (threads_override) {
      cfg.threads = *threads_override;
      cfg.echo["threads"] = *threads_override;
    }
    if (out_override) {
      cfg.out_dir = *out_override;
      cfg.echo["out_dir"] = *out_override;
    }
    return run_experiment(cfg);
  } catch (const domain_error& e) {
    result.exit_code = 2;
    result.error = e.what();
  } catch (const capability_error& e) {
    result.exit_code = 3;
    result.error = e.what();
  } catch (const numeric_error& e) {
    result.exit_code = 3;
    result.error = e.what();
  } catch (const std::exception& e) {
    result.exit_code = 3;
    result.error = e.what();
  }
  return result;
}

std::string run_config_json(const std::string& config_json) {
  json j;
  try {
    j = json::parse(config_json);
  } catch (const json::parse_error& e) {
    throw domain_error(std::string("config parse error: ") + e.what());
  }
  const RunConfig cfg = parse_config(j);
  const RunResult result = run_experiment(cfg);
  return result.summary.dump(2);
}

}  // namespace topkboot
