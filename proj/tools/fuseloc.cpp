#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "fuseloc/cli.hpp"

namespace {

void add_common(CLI::App* cmd, fuseloc::cli::RunConfig& cfg, std::uint64_t& seed) {
  cmd->add_option("--config", cfg.config, "Scenario file (YAML)")->required();
  cmd->add_option("--out", cfg.out_dir, "Output directory");
  cmd->add_option("--seed", seed, "Seed override");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EKF localization simulator: wheel odometry, compass, omni camera and LRF lines"};
  app.require_subcommand(1);

  fuseloc::cli::RunConfig cfg;
  std::uint64_t seed = 0;
  std::size_t runs = 0;

  CLI::App* simulate = app.add_subcommand("simulate", "Run one seeded scenario and write logs");
  add_common(simulate, cfg, seed);
  simulate->add_option("--estimators", cfg.estimators, "Estimator subset")->delimiter(',');

  CLI::App* compare = app.add_subcommand("compare", "Monte Carlo comparison over consecutive seeds");
  add_common(compare, cfg, seed);
  compare->add_option("--estimators", cfg.estimators, "Estimator subset")->delimiter(',');
  compare->add_option("--runs", runs, "Number of seeds (>= 2)");

  CLI::App* calibrate = app.add_subcommand("calibrate-delta", "Estimate the wheel-speed noise factor");
  add_common(calibrate, cfg, seed);
  calibrate->add_option("--runs", runs, "Number of calibration runs (>= 10)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, std::cerr, std::cerr) == 0 ? 0 : fuseloc::cli::kExitUsage;
  }

  CLI::App* active = app.get_subcommands().front();
  if (active->count("--seed") > 0) cfg.seed = seed;
  if (active->get_option_no_throw("--runs") != nullptr && active->count("--runs") > 0) cfg.runs = runs;

  if (active == simulate) return fuseloc::cli::cmd_simulate(cfg, std::cerr);
  if (active == compare) return fuseloc::cli::cmd_compare(cfg, std::cerr);
  return fuseloc::cli::cmd_calibrate_delta(cfg, std::cout, std::cerr);
}
