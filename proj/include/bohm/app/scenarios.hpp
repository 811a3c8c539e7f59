#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bohm/app/config.hpp"

namespace bohm::app {

struct RunSummary {
  std::string scenario;
  std::string key;  // name of the headline scalar
  double value = 0.0;
  std::string detail;
  std::vector<std::filesystem::path> files;  // written, in order
};

// Runs the scenario of a resolved config and writes its outputs, the
// resolved-config echo included, under output.dir.
RunSummary run_scenario(const json& resolved);

std::filesystem::path output_path(const json& resolved, const std::string& name);

// Pretty-printed echo, stable across runs.
std::string dump_config(const json& resolved);

}  // namespace bohm::app
