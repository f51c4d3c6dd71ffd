#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "topkboot/anticoncentration.hpp"
#include "topkboot/bootstrap.hpp"
#include "topkboot/experiments.hpp"

namespace topkboot {

// Experiment harness: one JSON config file in, CSV/JSON artifacts out.
// Outputs are byte-identical for identical (config, seed, version) at any
// thread count.

enum class ExperimentKind {
  rho_kappa,
  rho_d,
  coverage,
  approx_coverage,
  anticoncentration,
  gaussian_pair,
  functional,
  diverging,
  audit_smooth,
};

ExperimentKind kind_from_string(const std::string& name);
std::string kind_to_string(ExperimentKind kind);

struct CatalogEntry {
  std::string kind;
  std::string claim;  // the mathematical statement the experiment exercises
};

std::vector<CatalogEntry> list_experiments();

struct RunConfig {
  ExperimentKind kind = ExperimentKind::rho_kappa;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out_dir = "out";

  GeneratorSpec generator;
  KappaSpec kappa = KappaSpec::fixed(1);
  int d = 0;
  std::vector<int> n_ladder;
  std::vector<int> p_ladder;
  int mc_reps = 1000;
  int bootstrap_replicates = 500;
  int gaussian_reps = 100000;
  long draws = 100000;
  std::vector<double> alpha_list{0.9, 0.95};
  std::vector<double> epsilon_list{0.01, 0.05};
  double beta = 0.0;  // 0 = default (ln p) n^{1/8}
  double u = 0.0;     // 0 = derived from the sample envelope
  double gamma = 0.05;
  std::string g_label = "sin";
  GaussianSide side = GaussianSide::population;
  double zeta1 = 0.0;
  double zeta2 = 0.0;
  std::string transform = "identity";
  std::optional<CovarianceModel> covariance_u;  // gaussian_pair only
  bool coupled = true;
  int audit_points = 20;

  // Constant knobs (the theory constants are existential; these are the
  // configured stand-ins, echoed into every report).
  double C2 = 1.0;
  double C3 = 1.0;
  double c2 = 0.0;
  double slack = 1.15;
  double bound_constant = 1.0;

  nlohmann::json echo;  // the canonicalized input config
};

// Parses and fully validates; throws domain_error with a field-level
// message on the first violation.
RunConfig parse_config(const nlohmann::json& j);
RunConfig parse_config_file(const std::string& path);

// Validation-only entry: returns all violations instead of throwing.
std::vector<std::string> validate_config(const nlohmann::json& j);

struct RunResult {
  int exit_code = 0;  // 0 ok, 2 config error, 3 numeric/capability error
  std::string error;
  std::vector<std::string> outputs;  // file paths written
  nlohmann::json summary;
};

// Executes the configured experiment and writes <out_dir>/cells.csv (or the
// kind-specific table), <out_dir>/summary.json and <out_dir>/manifest.json.
RunResult run_experiment(const RunConfig& config);

// Convenience: parse + run, mapping exceptions onto exit codes.
RunResult run_config_file(const std::string& path,
                          const std::optional<std::uint64_t>& seed_override,
                          const std::optional<int>& threads_override,
                          const std::optional<std::string>& out_override);

// JSON-string entry point used by the language bindings.
std::string run_config_json(const std::string& config_json);

}  // namespace topkboot
