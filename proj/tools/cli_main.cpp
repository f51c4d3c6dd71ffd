#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "topkboot/errors.hpp"
#include "topkboot/harness.hpp"
#include "topkboot/report_io.hpp"
#include "topkboot/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"topkboot: smooth top-k statistics and multiplier-bootstrap "
               "experiment harness"};
  app.set_version_flag("--version", std::string(topkboot::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> threads_override;
  std::optional<std::string> out_override;

  auto* run = app.add_subcommand("run", "Execute an experiment config");
  run->add_option("config", config_path, "JSON config file")->required();
  std::uint64_t seed_val = 0;
  int threads_val = 0;
  std::string out_val;
  auto* seed_opt = run->add_option("--seed", seed_val, "Override master seed");
  auto* threads_opt =
      run->add_option("--threads", threads_val, "Worker threads (0 = auto)");
  auto* out_opt = run->add_option("--out", out_val, "Override output directory");

  auto* list = app.add_subcommand("list", "Print the experiment catalog");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Validate a config file");
  validate->add_option("config", validate_path, "JSON config file")->required();

  CLI11_PARSE(app, argc, argv);

  if (*list) {
    for (const auto& entry : topkboot::list_experiments()) {
      std::cout << entry.kind << " -> " << entry.claim << "\n";
    }
    return 0;
  }

  if (*validate) {
    try {
      const auto text = topkboot::read_text_file(validate_path);
      const auto errors = topkboot::validate_config(nlohmann::json::parse(text));
      if (errors.empty()) {
        std::cout << "ok\n";
        return 0;
      }
      for (const auto& e : errors) std::cerr << "config error: " << e << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    }
  }

  if (seed_opt->count() > 0) seed_override = seed_val;
  if (threads_opt->count() > 0) threads_override = threads_val;
  if (out_opt->count() > 0) out_override = out_val;

  const auto result = topkboot::run_config_file(config_path, seed_override,
                                                threads_override, out_override);
  if (result.exit_code != 0) {
    nlohmann::json err = {{"error", result.error},
                          {"exit_code", result.exit_code}};
    std::cerr << err.dump(2) << "\n";
    return result.exit_code;
  }
  for (const auto& path : result.outputs) {
    std::cout << "wrote " << path << "\n";
  }
  return 0;
}
