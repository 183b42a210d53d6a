// kac: command-line front end for the generalized Kac model toolkit.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kac/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generalized Kac model: simulation, mean-field solvers, hierarchy constants, chaos checks"};
  app.set_version_flag("--version", std::string("kac ") + kac::kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  std::string output_dir;
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the config)");
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--set", overrides, "Override a config value: dotted.key=value (repeatable)");
  app.add_option("--workers", workers, "Worker threads (default: KAC_WORKERS or machine parallelism)")
      ->check(CLI::PositiveNumber);
  auto* out_opt = app.add_option("--output-dir", output_dir, "Directory for CSV and manifest output");

  const char* commands[][2] = {
      {"simulate", "Run the N-particle Kac process and write marginal estimates"},
      {"boltzmann", "Solve the limiting equation (mean-field sampler, grid solver for the Kac toy)"},
      {"hierarchy", "Hierarchy constants, horizon and coefficient sweeps"},
      {"chaos", "Propagation-of-chaos sweep over N"},
      {"laws-check", "Isometry, involution and symmetry checks for collision laws"},
  };
  for (auto& c : commands) app.add_subcommand(c[0], c[1]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kac::kConfigError;
  }

  kac::CommandOptions opt;
  if (*seed_opt) opt.seed = seed;
  if (*out_opt) opt.output_dir = output_dir;
  opt.workers = workers;
  const std::string command = app.get_subcommands().front()->get_name();
  return kac::dispatch(command, config_path, overrides, opt);
}
