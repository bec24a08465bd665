// mott <command> --config <path> [--out <dir>] [--seed <n>] [--points <n>]

#include "mott/mott.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace mott::harness;

int run(int argc, char** argv) {
  CLI::App app{"Numerical lab for the three-particle cloud-chamber model"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> points;

  for (const char* name :
       {"verify", "critical-point", "bounds", "stationary-check", "scan-epsilon", "scan-angle", "probability"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment configuration file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    sub->add_option("--seed", seed, "master seed (overrides seed)");
    sub->add_option("--points", points, "QMC points per replicate (overrides qmc.points)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }
  const Command cmd = *parse_command(app.get_subcommands().front()->get_name());

  ExperimentConfig cfg;
  try {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw mott::ConfigError("cannot read " + config_path, "--config");
    std::ostringstream text;
    text << in.rdbuf();
    cfg = parse_config(text.str());
    if (seed) cfg.plan.seed = *seed;
    if (points) cfg.plan.point_count = *points;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    validate(cfg);
  } catch (const mott::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const mott::Error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  }
  for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << "\n";

  const CommandOutcome outcome = run_command(cmd, cfg);
  for (const auto& line : outcome.report) std::cout << line << "\n";
  try {
    write_records(outcome.results, cfg.output_dir);
    write_plot_data(outcome.plots, cfg.output_dir);
  } catch (const mott::Error& e) {
    std::cerr << "output error: " << e.what() << "\n";
    return outcome.exit_code != kExitOk ? outcome.exit_code : kExitNumerical;
  }
  std::cout << "results written to " << cfg.output_dir << "\n";
  return outcome.exit_code;
}

} // namespace

int main(int argc, char** argv) { return run(argc, argv); }
