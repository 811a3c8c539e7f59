#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "bohm/dynamics.hpp"
#include "bohm/errors.hpp"
#include "bohm/relax.hpp"
#include "bohm/wavefield.hpp"

namespace bohm::app {

using nlohmann::json;

// Anything wrong with the configuration itself. line and column are set for
// syntax errors only (1-based, 0 when unknown).
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0, int column = 0);
  int line;
  int column;
};

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"trajectory",      "nodal-scan",
                                              "nodal-line-3d",   "series-check",
                                              "invariant-check", "relax"};
  return names;
}

struct BuiltinModel {
  std::string name;
  std::string summary;
  json defaults;
};

const std::vector<BuiltinModel>& builtin_models();

json parse_config_text(const std::string& text);
json load_config_file(const std::string& path);

// Strict merge of the user config over the defaults for its scenario. Every
// key of the result is materialized; unknown keys and type mismatches raise
// ConfigError, as do violated invariants of the objects the config builds.
json resolve_config(const json& user);

Wavefunction build_model(const json& model);
IntegratorSettings build_integrator(const json& integrator);
EnsembleSpec build_ensemble(const json& ensemble, std::uint64_t seed);
GridSpec build_grid(const json& grid);

}  // namespace bohm::app
