#include <CLI11.hpp>
#include <fmt/format.h>

#include "prf/scenarios.hpp"

int main(int argc, char** argv) {
  CLI::App app{"pulsedrf: pulsed resonance fluorescence, filtered photon "
               "correlations and counting statistics"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  int workers = -1;
  long seed = -1;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "run a scenario described by a config file");
  run->add_option("config", config_path, "path to the scenario config")->required();
  run->add_option("--workers", workers, "worker count (overrides PULSEDRF_WORKERS)");
  run->add_option("--out", out_dir, "output directory (overrides config)");
  run->add_option("--seed", seed, "random seed (overrides config)");
  run->add_flag("--quiet", quiet, "suppress progress output");

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = prf::ScenarioConfig::from_file(config_path);
    if (workers >= 0) cfg.workers = workers;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.quiet = quiet;
    return prf::run_scenario(cfg);
  } catch (const prf::ConfigError& e) {
    fmt::print(stderr, "validation error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 3;
  }
}
