// Copyright (c) opmm contributors
// SPDX-License-Identifier: Apache-2.0

// opmm run|sweep|check --config <path> [--route primal|dual] [--strict]
//                      [--out <path>] [--seed <u64>]

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "opmm/harness/commands.hpp"
#include "opmm/harness/config.hpp"

namespace {

using namespace opmm::harness;

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw opmm::Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw opmm::Error("failed writing '" + path + "'");
}

std::string output_path(const std::string& flag, const RunConfig& cfg,
                        const char* fallback) {
  if (!flag.empty()) return flag;
  if (!cfg.output.empty()) return cfg.output;
  return fallback;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online proximal method of multipliers: runs, sweeps and audits"};
  app.require_subcommand(1);

  std::string config_path;
  std::string route;
  std::string out_path;
  std::uint64_t seed = 0;
  bool strict = false;
  std::vector<opmm::Index> horizons;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Run configuration (JSON)")->required();
    cmd->add_option("--route", route, "Subproblem route")
        ->check(CLI::IsMember({"primal", "dual"}));
    cmd->add_flag("--strict", strict, "Fail on inner-solver iteration limits");
    cmd->add_option("--out", out_path, "Output CSV path");
    cmd->add_option("--seed", seed, "Stream seed (overrides the config)");
  };
  auto* run = app.add_subcommand("run", "Execute one run and write the per-round CSV");
  auto* sweep = app.add_subcommand("sweep", "Run several horizons and fit log-log slopes");
  auto* check = app.add_subcommand("check", "Audit the instance's assumptions");
  add_common(run);
  add_common(sweep);
  add_common(check);
  sweep->add_option("--horizons", horizons, "Horizons (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    RunOptions opts;
    opts.strict = strict;
    if (!route.empty()) opts.route = route;
    for (auto* cmd : {run, sweep, check}) {
      if (cmd->parsed() && cmd->count("--seed") > 0) opts.seed = seed;
    }
    const RunConfig cfg = apply_options(load_config(config_path), opts);

    if (run->parsed()) {
      const auto res = run_experiment(cfg, strict);
      const std::string path = output_path(out_path, cfg, "opmm_run.csv");
      write_file(path, res.csv);
      const std::string summary = res.summary.dump(2) + "\n";
      write_file(path + ".summary.json", summary);
      std::cout << summary;
      return 0;
    }
    if (sweep->parsed()) {
      const auto& hs = horizons.empty() ? cfg.horizons : horizons;
      const auto res = sweep_experiment(cfg, hs, strict);
      const std::string path = output_path(out_path, cfg, "opmm_sweep.csv");
      write_file(path, res.csv);
      const std::string summary = res.summary.dump(2) + "\n";
      write_file(path + ".summary.json", summary);
      std::cout << "slopes: " << res.summary["slopes"].dump() << "\n";
      return 0;
    }
    const auto res = check_experiment(cfg);
    std::cout << res.report.to_text();
    return res.passed ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const opmm::MaxItersExceeded<double>& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
