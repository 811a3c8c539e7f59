#include "bohm/app/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace bohm::app {

ConfigError::ConfigError(const std::string& what, int line_, int column_)
    : Error(what), line(line_), column(column_) {}

namespace {

const double kInvSqrt3 = 1.0 / std::sqrt(3.0);

json eq_defaults(const char* name) {
  return {{"builtin", name}, {"a", 1.23}, {"b", 1.15}, {"c", std::sqrt(0.5)}};
}

json integrator_defaults() {
  const IntegratorSettings s;
  return {{"rel_tol", s.rel_tol},
          {"abs_tol", s.abs_tol},
          {"max_step", s.max_step},
          {"node_guard_radius", s.node_guard_radius},
          {"renorm_interval", s.renorm_interval},
          {"sample_interval", s.sample_interval},
          {"min_step", s.min_step},
          {"max_steps", s.max_steps}};
}

json scenario_defaults(const std::string& scenario) {
  if (scenario == "trajectory")
    return {{"t0", 0.0},
            {"t1", 100.0},
            {"starts", json::array({json::array({-1.23, 0.84})})},
            {"layout", "concatenated"}};
  if (scenario == "nodal-scan")
    return {{"t_start", 0.5},
            {"t_end", 3.0},
            {"dt", 0.01},
            {"region", {-5.0, 5.0, -5.0, 5.0}},
            {"grid", 80},
            {"hopf", {{"enabled", true}, {"offset", 0.02}, {"radius", 1e-3}}},
            {"manifolds",
             {{"times", json::array()}, {"arc_length_rx", 400.0}, {"box_half_width_rx", 20.0}}},
            {"scattering",
             {{"times", json::array()}, {"points", 9}, {"decades", 2.0}, {"smallest", 1e-5}}}};
  if (scenario == "nodal-line-3d")
    return {{"t", 5.9},
            {"seed", nullptr},
            {"scan", {{"box", {-2.0, 2.0, -2.0, 2.0, -2.0, 2.0}}, {"step", 0.1}}},
            {"arc_length", 2.0},
            {"step", 1e-2},
            {"min_step", 1e-6},
            {"plane_stride", 2},
            {"probe_radius", 1e-4}};
  if (scenario == "series-check")
    return {{"kind", "diagonal"},
            {"x0", 5.0},
            {"y0", 5.0},
            {"t_end", 100.0},
            {"dt", 0.05},
            {"certify", json::array()},
            {"certify_t_end", 100.0}};
  if (scenario == "invariant-check")
    return {{"t0", 0.0},
            {"t1", 100.0},
            {"starts", json::array()},
            {"random", {{"count", 19}, {"box", {-1.0, 1.0, -1.0, 1.0, 0.2, 1.2}}}},
            {"level_set", {{"C", 2.39255}, {"count", 1}}},
            {"invariant",
             {{"c", {1.0, 1.0, 0.5}}, {"log_coef", -std::sqrt(3.0) / 6.0}, {"log_axis", 2}}},
            {"control", true},
            {"sample_interval", 0.01},
            {"probe", {{"enabled", true}, {"count", 12}, {"t1", 100.0}}}};
  if (scenario == "relax")
    return {{"ensemble",
             {{"sampler", "uniform-box"},
              {"count", 400},
              {"center", {-1.23, 0.84}},
              {"side", 0.4},
              {"region", nullptr},
              {"lattice_n", 20},
              {"seed", nullptr}}},
            {"grid",
             {{"n", 24},
              {"sigma", nullptr},
              {"box", nullptr},
              {"reference", "smoothed"},
              {"subdivisions", 8}}},
            {"t0", 0.0},
            {"t_end", 1e4},
            {"times", nullptr},
            {"dump_grids", false}};
  throw ConfigError("unknown scenario '" + scenario + "'");
}

std::string default_model_for(const std::string& scenario) {
  if (scenario == "nodal-line-3d" || scenario == "invariant-check") return "model-3d-integrable";
  if (scenario == "relax") return "model-eq30";
  return "model-eq12";
}

const char* kind_name(const json& v) {
  if (v.is_null()) return "null";
  if (v.is_boolean()) return "boolean";
  if (v.is_number_integer()) return "integer";
  if (v.is_number()) return "number";
  if (v.is_string()) return "string";
  if (v.is_array()) return "array";
  return "object";
}

// Recursive strict merge: keys must exist in the defaults; types must
// agree, with integers accepted where reals are expected. A null default
// accepts anything.
json merge(const json& defaults, const json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError("'" + path + "' must be an object");
  json out = defaults;
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!defaults.contains(it.key())) throw ConfigError("unknown key '" + key + "'");
    const json& d = defaults.at(it.key());
    const json& u = it.value();
    if (d.is_null() || u.is_null()) {
      out[it.key()] = u;
      continue;
    }
    if (d.is_object()) {
      out[it.key()] = merge(d, u, key);
      continue;
    }
    bool ok = false;
    if (d.is_number_integer())
      ok = u.is_number_integer() || (u.is_number_float() && std::floor(u.get<double>()) ==
                                                                 u.get<double>());
    else if (d.is_number())
      ok = u.is_number();
    else if (d.is_boolean())
      ok = u.is_boolean();
    else if (d.is_string())
      ok = u.is_string();
    else if (d.is_array())
      ok = u.is_array();
    if (!ok)
      throw ConfigError("'" + key + "' must be " + (d.is_number_integer() ? "an integer" :
                        d.is_number() ? "a number" : std::string("a ") + kind_name(d)) +
                        ", got " + kind_name(u));
    out[it.key()] = d.is_number_integer() ? json(u.get<long long>()) : u;
  }
  return out;
}

const BuiltinModel* find_builtin(const std::string& name) {
  for (const auto& m : builtin_models())
    if (m.name == name) return &m;
  return nullptr;
}

json resolve_model(const json& user, const std::string& scenario) {
  if (!user.is_null() && !user.is_object()) throw ConfigError("'model' must be an object");
  if (!user.is_null() && user.contains("terms")) {
    if (user.contains("builtin")) throw ConfigError("'model' has both 'builtin' and 'terms'");
    const int dim = user.value("dim", 2);
    json d = {{"dim", 2},
              {"mass", json::array()},
              {"omega", json::array()},
              {"hbar", 1.0},
              {"terms", json::array()},
              {"name", "terms"}};
    json m = merge(d, user, "model");
    if (m["mass"].empty()) m["mass"] = std::vector<double>(dim, 1.0);
    if (m["omega"].empty()) m["omega"] = std::vector<double>(dim, 1.0);
    return m;
  }
  const std::string name = user.is_null() ? default_model_for(scenario)
                                          : user.value("builtin", default_model_for(scenario));
  const BuiltinModel* b = find_builtin(name);
  if (!b) throw ConfigError("unknown builtin model '" + name + "'");
  return merge(b->defaults, user.is_null() ? json::object() : user, "model");
}

std::array<double, 3> triple(const json& v, int dim, const char* what) {
  if (!v.is_array() || int(v.size()) != dim)
    throw ConfigError(std::string("'model.") + what + "' needs " + std::to_string(dim) +
                      " entries");
  std::array<double, 3> out{1.0, 1.0, 1.0};
  for (int k = 0; k < dim; ++k) {
    if (!v[k].is_number()) throw ConfigError(std::string("'model.") + what + "' must be numeric");
    out[k] = v[k].get<double>();
  }
  return out;
}

complex amplitude(const json& v, const std::string& where) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  throw ConfigError("'" + where + "' must be a number or [re, im]");
}

Quanta quanta(const json& v, int dim, const std::string& where) {
  if (!v.is_array() || int(v.size()) != dim)
    throw ConfigError("'" + where + "' needs " + std::to_string(dim) + " quantum numbers");
  Quanta n{0, 0, 0};
  for (int k = 0; k < dim; ++k) {
    if (!v[k].is_number_integer()) throw ConfigError("'" + where + "' must hold integers");
    n[k] = v[k].get<int>();
  }
  return n;
}

// Turns library invariant violations into configuration errors.
template <class F>
auto checked(const std::string& block, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const InputError& e) {
    throw ConfigError("invalid '" + block + "': " + e.what());
  }
}

std::vector<double> numbers(const json& v, const std::string& where, std::size_t n) {
  if (!v.is_array() || (n && v.size() != n))
    throw ConfigError("'" + where + "' needs " + std::to_string(n) + " numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError("'" + where + "' must be numeric");
    out.push_back(x.get<double>());
  }
  return out;
}

void check_points(const json& pts, int dim, const std::string& where) {
  if (!pts.is_array()) throw ConfigError("'" + where + "' must be an array of points");
  for (std::size_t i = 0; i < pts.size(); ++i)
    numbers(pts[i], where + "[" + std::to_string(i) + "]", dim);
}

void require_positive(const json& block, const std::string& key, const std::string& path) {
  if (!(block.at(key).get<double>() > 0.0))
    throw ConfigError("'" + path + "." + key + "' must be positive");
}

void validate_scenario(json& cfg, const Wavefunction& wf) {
  const std::string sc = cfg["scenario"];
  json& b = cfg[sc];
  const int dim = wf.spec.dim;
  const auto need_dim = [&](int d) {
    if (dim != d)
      throw ConfigError("scenario '" + sc + "' needs a " + std::to_string(d) + "D model");
  };
  if (sc == "trajectory") {
    check_points(b["starts"], dim, sc + ".starts");
    if (b["starts"].empty()) throw ConfigError("'trajectory.starts' is empty");
    if (b["layout"] != "concatenated" && b["layout"] != "per-trajectory")
      throw ConfigError("'trajectory.layout' must be 'concatenated' or 'per-trajectory'");
  } else if (sc == "nodal-scan") {
    need_dim(2);
    numbers(b["region"], sc + ".region", 4);
    require_positive(b, "dt", sc);
    if (!(b["t_end"].get<double>() > b["t_start"].get<double>()))
      throw ConfigError("'nodal-scan.t_end' must exceed 't_start'");
    if (b["grid"].get<int>() < 4) throw ConfigError("'nodal-scan.grid' must be at least 4");
    numbers(b["manifolds"]["times"], sc + ".manifolds.times", 0);
    numbers(b["scattering"]["times"], sc + ".scattering.times", 0);
    if (b["scattering"]["points"].get<int>() < 2)
      throw ConfigError("'nodal-scan.scattering.points' must be at least 2");
  } else if (sc == "nodal-line-3d") {
    need_dim(3);
    if (!b["seed"].is_null()) numbers(b["seed"], sc + ".seed", 3);
    numbers(b["scan"]["box"], sc + ".scan.box", 6);
    require_positive(b["scan"], "step", sc + ".scan");
    require_positive(b, "step", sc);
    require_positive(b, "min_step", sc);
    if (b["plane_stride"].get<int>() < 1)
      throw ConfigError("'nodal-line-3d.plane_stride' must be at least 1");
  } else if (sc == "series-check") {
    if (wf.tag != ModelTag::eq12) throw ConfigError("'series-check' needs the model-eq12 builtin");
    if (b["kind"] != "diagonal" && b["kind"] != "central")
      throw ConfigError("'series-check.kind' must be 'diagonal' or 'central'");
    check_points(b["certify"], 2, sc + ".certify");
    require_positive(b, "t_end", sc);
    require_positive(b, "dt", sc);
  } else if (sc == "invariant-check") {
    need_dim(3);
    check_points(b["starts"], 3, sc + ".starts");
    numbers(b["random"]["box"], sc + ".random.box", 6);
    numbers(b["invariant"]["c"], sc + ".invariant.c", 3);
    const int ax = b["invariant"]["log_axis"];
    if (ax < 0 || ax > 2) throw ConfigError("'invariant-check.invariant.log_axis' must be 0, 1 or 2");
    if (b["probe"]["count"].get<int>() < 2)
      throw ConfigError("'invariant-check.probe.count' must be at least 2");
  } else if (sc == "relax") {
    need_dim(2);
    json& e = b["ensemble"];
    if (e["seed"].is_null()) e["seed"] = cfg["seed"];
    checked("relax.ensemble", [&] {
      build_ensemble(e, e["seed"].get<std::uint64_t>()).validate();
      return 0;
    });
    json& g = b["grid"];
    if (g["box"].is_null()) {
      const Box2 bx = default_box(wf);
      g["box"] = {bx.xmin, bx.xmax, bx.ymin, bx.ymax};
    }
    const auto bx = numbers(g["box"], "relax.grid.box", 4);
    if (!(bx[1] > bx[0]) || !(bx[3] > bx[2])) throw ConfigError("'relax.grid.box' is empty");
    if (g["n"].get<int>() < 1) throw ConfigError("'relax.grid.n' must be at least 1");
    if (g["sigma"].is_null()) g["sigma"] = (bx[1] - bx[0]) / g["n"].get<int>();
    if (!(g["sigma"].get<double>() > 0.0)) throw ConfigError("'relax.grid.sigma' must be positive");
    if (g["reference"] != "smoothed" && g["reference"] != "point")
      throw ConfigError("'relax.grid.reference' must be 'smoothed' or 'point'");
    if (b["times"].is_null()) {
      std::vector<double> ts;
      for (double t : geometric_snapshots(b["t_end"].get<double>() - b["t0"].get<double>()))
        ts.push_back(b["t0"].get<double>() + t);
      b["times"] = ts;
    }
    const auto ts = numbers(b["times"], "relax.times", 0);
    if (ts.empty()) throw ConfigError("'relax.times' is empty");
    for (std::size_t k = 0; k < ts.size(); ++k)
      if (ts[k] < b["t0"].get<double>() || (k && !(ts[k] > ts[k - 1])))
        throw ConfigError("'relax.times' must increase from t0");
  }
}

}  // namespace

const std::vector<BuiltinModel>& builtin_models() {
  static const std::vector<BuiltinModel> models{
      {"model-eq12", "2D oscillator, c = omega_y/omega_x: 1 + a x e^{-it} + b sqrt(c) x y e^{-i(1+c)t}",
       eq_defaults("model-eq12")},
      {"model-eq30",
       "2D oscillator: 1 + a (x^2 - 1/2) e^{-2it} + b sqrt(c) x y e^{-i(1+c)t}",
       eq_defaults("model-eq30")},
      {"model-3d-integrable",
       "a Psi_100 + b Psi_010 + c Psi_002, omega = (1, sqrt2, sqrt3)",
       {{"builtin", "model-3d-integrable"}, {"a", kInvSqrt3}, {"b", kInvSqrt3}, {"c", kInvSqrt3}}},
      {"model-3d", "three 3D eigenstates with amplitudes and frequencies of choice",
       {{"builtin", "model-3d"},
        {"combo", {{1, 0, 0}, {0, 1, 0}, {0, 0, 2}}},
        {"amps", {kInvSqrt3, kInvSqrt3, kInvSqrt3}},
        {"omega", {1.0, std::sqrt(2.0), std::sqrt(3.0)}}}},
      {"eigenstate", "a single stationary eigenstate",
       {{"builtin", "eigenstate"},
        {"dim", 2},
        {"n", {0, 0}},
        {"mass", {1.0, 1.0}},
        {"omega", {1.0, 1.0}},
        {"hbar", 1.0}}},
  };
  return models;
}

json parse_config_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    int line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte, text.size());
    for (std::size_t i = 0; i + 1 < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string msg = e.what();
    // Drop the library's own position prefix; ours counts lines itself.
    const auto p = msg.find(": ", msg.find("parse error"));
    if (p != std::string::npos) msg = msg.substr(p + 2);
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                          msg,
                      line, col);
  }
}

json load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

json resolve_config(const json& user) {
  if (!user.is_object()) throw ConfigError("config must be a JSON object");
  if (!user.contains("scenario") || !user["scenario"].is_string())
    throw ConfigError("missing 'scenario' (one of trajectory, nodal-scan, nodal-line-3d, "
                      "series-check, invariant-check, relax)");
  const std::string sc = user["scenario"];
  bool known = false;
  for (const auto& n : scenario_names()) known = known || n == sc;
  if (!known) throw ConfigError("unknown scenario '" + sc + "'");

  json defaults = {{"scenario", sc},
                   {"seed", 1},
                   {"threads", 0},
                   {"model", json::object()},
                   {"integrator", integrator_defaults()},
                   {"output", {{"dir", "bohm-out"}, {"prefix", ""}}},
                   {sc, scenario_defaults(sc)}};
  json user_rest = user;
  user_rest.erase("model");
  json cfg = merge(defaults, user_rest, "");
  cfg["model"] = resolve_model(user.contains("model") ? user["model"] : json(), sc);
  if (cfg["seed"].get<long long>() < 0) throw ConfigError("'seed' must be non-negative");
  if (cfg["threads"].get<long long>() < 0) throw ConfigError("'threads' must be non-negative");

  const Wavefunction wf = build_model(cfg["model"]);
  build_integrator(cfg["integrator"]);
  validate_scenario(cfg, wf);
  return cfg;
}

Wavefunction build_model(const json& m) {
  return checked("model", [&]() -> Wavefunction {
    if (m.contains("terms")) {
      OscillatorSpec spec;
      spec.dim = m["dim"].get<int>();
      if (spec.dim != 2 && spec.dim != 3) throw ConfigError("'model.dim' must be 2 or 3");
      spec.mass = triple(m["mass"], spec.dim, "mass");
      spec.omega = triple(m["omega"], spec.dim, "omega");
      spec.hbar = m["hbar"].get<double>();
      std::vector<EigenstateTerm> terms;
      for (std::size_t i = 0; i < m["terms"].size(); ++i) {
        const json& t = m["terms"][i];
        const std::string where = "model.terms[" + std::to_string(i) + "]";
        if (!t.is_object()) throw ConfigError("'" + where + "' must be an object");
        for (auto it = t.begin(); it != t.end(); ++it)
          if (it.key() != "n" && it.key() != "amp")
            throw ConfigError("unknown key '" + where + "." + it.key() + "'");
        if (!t.contains("n") || !t.contains("amp"))
          throw ConfigError("'" + where + "' needs 'n' and 'amp'");
        terms.push_back({quanta(t["n"], spec.dim, where + ".n"), amplitude(t["amp"], where + ".amp"),
                         0.0});
      }
      return make_wavefunction(spec, terms, m["name"].get<std::string>());
    }
    const std::string name = m["builtin"];
    if (name == "model-eq12" || name == "model-eq30") {
      const double a = m["a"], b = m["b"], c = m["c"];
      if (!(c > 0.0)) throw ConfigError("'model.c' must be positive");
      return name == "model-eq12" ? model_eq12(a, b, c) : model_eq30(a, b, c);
    }
    if (name == "model-3d-integrable")
      return model_3d_integrable({complex(m["a"].get<double>()), complex(m["b"].get<double>()),
                                  complex(m["c"].get<double>())});
    if (name == "model-3d") {
      if (!m["combo"].is_array() || m["combo"].size() != 3)
        throw ConfigError("'model.combo' needs three index triples");
      if (!m["amps"].is_array() || m["amps"].size() != 3)
        throw ConfigError("'model.amps' needs three amplitudes");
      std::array<Quanta, 3> n;
      std::array<complex, 3> amp;
      for (int k = 0; k < 3; ++k) {
        n[k] = quanta(m["combo"][k], 3, "model.combo[" + std::to_string(k) + "]");
        amp[k] = amplitude(m["amps"][k], "model.amps[" + std::to_string(k) + "]");
      }
      return model_3d(n, amp, triple(m["omega"], 3, "omega"));
    }
    if (name == "eigenstate") {
      OscillatorSpec spec;
      spec.dim = m["dim"].get<int>();
      if (spec.dim != 2 && spec.dim != 3) throw ConfigError("'model.dim' must be 2 or 3");
      spec.mass = triple(m["mass"], spec.dim, "mass");
      spec.omega = triple(m["omega"], spec.dim, "omega");
      spec.hbar = m["hbar"].get<double>();
      return single_eigenstate(spec, quanta(m["n"], spec.dim, "model.n"));
    }
    throw ConfigError("unknown builtin model '" + name + "'");
  });
}

IntegratorSettings build_integrator(const json& j) {
  return checked("integrator", [&] {
    IntegratorSettings s;
    s.rel_tol = j["rel_tol"];
    s.abs_tol = j["abs_tol"];
    s.max_step = j["max_step"];
    s.node_guard_radius = j["node_guard_radius"];
    s.renorm_interval = j["renorm_interval"];
    s.sample_interval = j["sample_interval"];
    s.min_step = j["min_step"];
    s.max_steps = j["max_steps"];
    s.validate();
    return s;
  });
}

EnsembleSpec build_ensemble(const json& e, std::uint64_t seed) {
  return checked("relax.ensemble", [&] {
    EnsembleSpec s;
    const std::string kind = e["sampler"];
    if (kind == "uniform-box")
      s.sampler = SamplerKind::uniform_box;
    else if (kind == "born-rule")
      s.sampler = SamplerKind::born_rule;
    else if (kind == "grid-lattice")
      s.sampler = SamplerKind::grid_lattice;
    else
      throw ConfigError("'relax.ensemble.sampler' must be uniform-box, born-rule or grid-lattice");
    s.count = e["count"].get<long>();
    const auto c = numbers(e["center"], "relax.ensemble.center", 2);
    s.center = Vec2(c[0], c[1]);
    s.side = e["side"];
    if (!e["region"].is_null()) {
      const auto r = numbers(e["region"], "relax.ensemble.region", 4);
      s.region = {r[0], r[1], r[2], r[3]};
    }
    s.lattice_n = e["lattice_n"];
    s.seed = e["seed"].is_null() ? seed : e["seed"].get<std::uint64_t>();
    s.validate();
    return s;
  });
}

GridSpec build_grid(const json& g) {
  GridSpec s;
  s.n = g["n"];
  if (!g["sigma"].is_null()) s.sigma = g["sigma"];
  if (!g["box"].is_null()) {
    const auto b = numbers(g["box"], "relax.grid.box", 4);
    s.box = {b[0], b[1], b[2], b[3]};
  }
  s.reference = g["reference"] == "point" ? Reference::point : Reference::smoothed;
  s.subdivisions = g["subdivisions"];
  return s;
}

}  // namespace bohm::app
