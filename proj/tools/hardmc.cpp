#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hardmc/cli/commands.hpp"

namespace cli = hardmc::cli;

int main(int argc, char** argv) {
  CLI::App app{"Hard instances for MALA and HMC: identity checks and desk-scale experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
  app.add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed (overrides config)");
  app.add_option("--threads", threads, "worker threads (overrides config)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", out, "CSV output path, '-' for stdout (overrides config)");

  std::optional<int> k_max;
  bool inject_fault = false;
  auto* verify = app.add_subcommand("verify-identities", "run the exact-identity suite");
  verify->add_option("--k-max", k_max, "largest leapfrog step count in Chebyshev rows")
      ->check(CLI::Range(1, hardmc::kMaxLeapfrogSteps));
  verify->add_flag("--inject-fault", inject_fault)->group("");
  app.add_subcommand("scan", "acceptance / escape / gap scan over a kernel grid");
  app.add_subcommand("mixing", "warm-start mixing time series");
  app.add_subcommand("resonance", "HMC resonance trap");
  app.add_subcommand("measure", "stationary measure of a witness set");
  app.add_subcommand("gap", "Dirichlet-form spectral gap witness");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  cli::ExperimentConfig config;
  try {
    if (!config_path.empty()) config = cli::load_config(config_path);
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return cli::kExitConfig;
  }
  if (seed) config.seed = *seed;
  if (threads) config.threads = *threads;
  if (out) config.output = *out;
  if (k_max) config.k_max = *k_max;
  return cli::execute(command, config, std::cout, std::cerr, inject_fault);
}
