#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bohm/app/config.hpp"
#include "bohm/app/scenarios.hpp"
#include "bohm/errors.hpp"
#include "bohm/nodal2d.hpp"
#include "bohm/nodal3d.hpp"
#include "bohm/relax.hpp"
#include "bohm/series.hpp"

namespace py = pybind11;
using namespace bohm;

namespace {

Vec to_vec(const std::vector<double>& v) {
  if (v.empty() || v.size() > std::size_t(kMaxDim)) throw InputError("position must have 1 to 3 components");
  Vec q(Eigen::Index(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) q(k) = v[k];
  return q;
}

std::vector<double> from_vec(const Vec& q) { return {q.data(), q.data() + q.size()}; }

std::vector<double> from_vec2(const Vec2& q) { return {q.x(), q.y()}; }

IntegratorSettings settings(double rel_tol, double abs_tol, double sample_interval) {
  IntegratorSettings s;
  s.rel_tol = rel_tol;
  s.abs_tol = abs_tol;
  s.sample_interval = sample_interval;
  s.validate();
  return s;
}

// (n, 2 + dim) array of t, q..., log_stretch
py::array_t<double> samples_array(const std::vector<TrajectorySample>& s) {
  const py::ssize_t dim = s.empty() ? 0 : s.front().q.size();
  py::array_t<double> out({py::ssize_t(s.size()), dim + 2});
  auto a = out.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < py::ssize_t(s.size()); ++i) {
    a(i, 0) = s[i].t;
    for (py::ssize_t k = 0; k < dim; ++k) a(i, 1 + k) = s[i].q(k);
    a(i, dim + 1) = s[i].log_stretch;
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bohmian trajectories, nodal-point diagnostics and quantum relaxation";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<app::ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<Wavefunction>(m, "Wavefunction")
      .def_property_readonly("dim", [](const Wavefunction& w) { return w.spec.dim; })
      .def_property_readonly("name", [](const Wavefunction& w) { return w.name; })
      .def("psi", [](const Wavefunction& w, const std::vector<double>& q, double t) {
        return eval(w, to_vec(q), t).psi;
      })
      .def("velocity", [](const Wavefunction& w, const std::vector<double>& q, double t) {
        return from_vec(velocity(w, to_vec(q), t));
      })
      .def("density", [](const Wavefunction& w, const std::vector<double>& q, double t) {
        return density(w, to_vec(q), t);
      });

  m.def("model_eq12", &model_eq12, py::arg("a") = 1.23, py::arg("b") = 1.15,
        py::arg("c") = std::sqrt(0.5));
  m.def("model_eq30", &model_eq30, py::arg("a") = 1.23, py::arg("b") = 1.15,
        py::arg("c") = std::sqrt(0.5));
  m.def("model_3d_integrable", py::overload_cast<>(&model_3d_integrable));
  m.def(
      "single_eigenstate",
      [](const std::vector<int>& n, const std::vector<double>& omega) {
        OscillatorSpec s;
        s.dim = int(n.size());
        Quanta q{0, 0, 0};
        for (std::size_t k = 0; k < n.size() && k < 3; ++k) q[k] = n[k];
        for (std::size_t k = 0; k < omega.size() && k < 3; ++k) s.omega[k] = omega[k];
        return single_eigenstate(s, q);
      },
      py::arg("n"), py::arg("omega") = std::vector<double>{});
  m.def("build_model", [](const std::string& model_json) {
    return app::build_model(app::json::parse(model_json));
  });

  m.def(
      "integrate",
      [](const Wavefunction& wf, const std::vector<double>& q0, double t0, double t1, double rel_tol,
         double abs_tol, double sample_interval) {
        Vec xi(Eigen::Index(q0.size()));
        xi.setZero();
        xi(0) = 1.0;
        const DeviationRun run =
            integrate_with_deviation(wf, to_vec(q0), xi, t0, t1, settings(rel_tol, abs_tol, sample_interval));
        return samples_array(run.samples);
      },
      py::arg("wf"), py::arg("q0"), py::arg("t0"), py::arg("t1"), py::arg("rel_tol") = 1e-10,
      py::arg("abs_tol") = 1e-12, py::arg("sample_interval") = 0.0,
      "Rows of (t, q..., ln stretch) at the sample cadence.");

  m.def("nodal_points", [](const Wavefunction& wf, double t, std::vector<double> region, int grid) {
    if (region.size() != 4) throw InputError("region is [xmin, xmax, ymin, ymax]");
    std::vector<std::vector<double>> out;
    for (const auto& n : find_nodal_points(wf, t, {region[0], region[1], region[2], region[3]}, grid))
      out.push_back({n.pos.x(), n.pos.y(), n.vel.x(), n.vel.y()});
    return out;
  }, py::arg("wf"), py::arg("t"), py::arg("region") = std::vector<double>{-5, 5, -5, 5},
     py::arg("grid") = 80);

  m.def("x_point", [](const Wavefunction& wf, double t, const std::vector<double>& guess) -> py::object {
    const auto nd = refine_nodal_point(wf, t, Vec2(guess.at(0), guess.at(1)));
    if (!nd) return py::none();
    const LocalExpansion e = local_expansion(wf, *nd);
    const XPointResult xr = find_x_point(e, e.boost);
    py::dict d;
    d["node"] = from_vec2(nd->pos);
    d["f3"] = f3_average(e, e.boost).f3;
    if (xr.found()) {
      const XPoint& x = xr.saddles.front();
      d["R"] = x.R;
      d["lambda1"] = x.lambda1;
      d["lambda2"] = x.lambda2;
      d["position"] = from_vec2(e.to_lab(x.pos));
    }
    return d;
  });

  m.def("nodal_path", [](double a, double b, double c, double t) { return from_vec2(nodal_path(a, b, c, t)); });
  m.def("series_central", [](double a, double b, double c, double x0, double y0, double t) {
    SeriesParams p{a, b, c, x0, y0, 1};
    return from_vec2(series_central(p, t));
  });
  m.def("series_diagonal", [](double a, double b, double c, double x0, double y0, double t) {
    SeriesParams p{a, b, c, x0, y0, 4};
    return from_vec2(series_diagonal(p, t));
  });

  m.def("invariant_value", [](const std::vector<double>& q) { return invariant_value(InvariantSpec{}, to_vec(q)); });
  m.def(
      "conservation_drift",
      [](const Wavefunction& wf, const std::vector<double>& q0, double t1) {
        return check_conservation(wf, InvariantSpec{}, to_vec(q0), 0.0, t1).max_drift;
      },
      py::arg("wf"), py::arg("q0"), py::arg("t1") = 100.0);

  m.def(
      "relaxation",
      [](const Wavefunction& wf, std::vector<double> center, long count, std::vector<double> times,
         std::uint64_t seed, double rel_tol) {
        RelaxationConfig cfg;
        cfg.wf = wf;
        cfg.ensemble.count = count;
        cfg.ensemble.center = Vec2(center.at(0), center.at(1));
        cfg.ensemble.seed = seed;
        cfg.times = times;
        cfg.settings = settings(rel_tol, rel_tol, 0.0);
        RelaxationSeries s;
        {
          py::gil_scoped_release release;
          s = run_relaxation(cfg);
        }
        py::dict d;
        d["t"] = s.times;
        d["D"] = s.D;
        d["Hs"] = s.H;
        d["hull_area"] = s.hull_area;
        d["failed"] = s.failed;
        return d;
      },
      py::arg("wf"), py::arg("center"), py::arg("count") = 400, py::arg("times") = std::vector<double>{0, 10},
      py::arg("seed") = 1, py::arg("rel_tol") = 1e-8);

  m.def("resolve_config", [](const std::string& text) {
    return app::dump_config(app::resolve_config(app::parse_config_text(text)));
  }, "Config text in, resolved config (JSON text) out.");
  m.def("run_config", [](const std::string& text) {
    const auto cfg = app::resolve_config(app::parse_config_text(text));
    app::RunSummary s;
    {
      py::gil_scoped_release release;
      s = app::run_scenario(cfg);
    }
    py::dict d;
    d["scenario"] = s.scenario;
    d["key"] = s.key;
    d["value"] = s.value;
    std::vector<std::string> files;
    for (const auto& f : s.files) files.push_back(f.string());
    d["files"] = files;
    return d;
  });
}
