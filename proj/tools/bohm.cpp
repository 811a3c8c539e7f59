#include <chrono>
#include <cstdio>
#include <exception>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "bohm/app/config.hpp"
#include "bohm/app/output.hpp"
#include "bohm/app/scenarios.hpp"

namespace {

using namespace bohm::app;

int cmd_run(const std::string& path) {
  const auto start = std::chrono::steady_clock::now();
  const json cfg = resolve_config(load_config_file(path));
  const RunSummary s = run_scenario(cfg);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  fmt::print("{}: {}={} ({}) wall {:.2f} s, {} files in {}\n", s.scenario, s.key,
             format_number(s.value), s.detail, wall, s.files.size(),
             cfg["output"]["dir"].get<std::string>());
  return 0;
}

int cmd_validate(const std::string& path) {
  const json cfg = resolve_config(load_config_file(path));
  write_atomic(output_path(cfg, "resolved_config.json"), dump_config(cfg));
  std::cout << dump_config(cfg);
  return 0;
}

int cmd_list_models() {
  for (const auto& m : builtin_models()) {
    fmt::print("{}\n  {}\n  defaults: {}\n", m.name, m.summary, m.defaults.dump());
  }
  fmt::print("explicit term lists: {{\"dim\", \"mass\", \"omega\", \"hbar\", "
             "\"terms\": [{{\"n\": [...], \"amp\": [re, im]}}]}}\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bohmian trajectory simulator: nodal-point diagnostics and quantum relaxation"};
  app.require_subcommand(1);
  std::string config;
  auto* run = app.add_subcommand("run", "run the scenario of a config file");
  run->add_option("config", config, "experiment config (JSON)")->required();
  auto* validate = app.add_subcommand("validate", "resolve a config and print it; no computation");
  validate->add_option("config", config, "experiment config (JSON)")->required();
  auto* list = app.add_subcommand("list-models", "list the builtin wavefunctions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (run->parsed()) return cmd_run(config);
    if (validate->parsed()) return cmd_validate(config);
    if (list->parsed()) return cmd_list_models();
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
