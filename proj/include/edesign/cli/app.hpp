#pragma once

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "edesign/cli/commands.hpp"

namespace edesign::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kSolverError = 3 };

/// Command-line entry point: `edesign <solve|oc|paths|grid-dump> --config <path> [--out <dir>]
/// [--jobs <k>] [--seed <u64>...]`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Horizon-aware e-value trial designs: solve, evaluate and export"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  int jobs = 1;
  std::vector<std::uint64_t> seeds;

  std::vector<CLI::App*> verbs;
  for (const char* name : {"solve", "oc", "paths", "grid-dump"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run config")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output_dir in the config)");
    sub->add_option("--jobs", jobs, "parallel solve jobs")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seeds, "path seeds (replace the config's seeds)");
    verbs.push_back(sub);
  }
  verbs[0]->description("solve each strategy and schedule, write policies, heatmaps and bounds");
  verbs[1]->description("exact operating characteristics under theta0 and theta1");
  verbs[2]->description("seeded sample paths with shared outcome streams");
  verbs[3]->description("dump the e-value and bet grids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  io::RunConfig config;
  try {
    config = io::load_config(config_path);
    if (!seeds.empty()) config.seeds = seeds;
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (config.output_dir.empty()) throw io::ConfigError("output_dir", "no output directory (use --out)");
  } catch (const InvalidArgument& e) {
    err << "config error: " << config_path << ": " << e.what() << "\n";
    return kConfigError;
  }

  try {
    const fs::path root(config.output_dir);
    fs::create_directories(root);
    OutputBundle bundle;
    if (app.got_subcommand("solve")) bundle = cmd_solve(config, root, jobs);
    else if (app.got_subcommand("oc")) bundle = cmd_oc(config, root, jobs);
    else if (app.got_subcommand("paths")) bundle = cmd_paths(config, root, jobs);
    else bundle = cmd_grid_dump(config, root);
    out << bundle.command << ": wrote " << bundle.files.size() << " files to " << root.string() << "\n";
    return kOk;
  } catch (const std::exception& e) {
    err << "solver error: " << e.what() << "\n";
    return kSolverError;
  }
}

}  // namespace edesign::cli
