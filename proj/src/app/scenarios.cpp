#include "bohm/app/scenarios.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include <fmt/format.h>

#include "bohm/app/output.hpp"
#include "bohm/nodal2d.hpp"
#include "bohm/nodal3d.hpp"
#include "bohm/parallel.hpp"
#include "bohm/relax.hpp"
#include "bohm/series.hpp"

namespace bohm::app {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> doubles(const json& v) {
  std::vector<double> out;
  for (const auto& x : v) out.push_back(x.get<double>());
  return out;
}

Vec to_vec(const json& v) {
  const auto d = doubles(v);
  Vec q(int(d.size()));
  for (std::size_t k = 0; k < d.size(); ++k) q(k) = d[k];
  return q;
}

json vec_json(const Vec& q) {
  json out = json::array();
  for (int k = 0; k < q.size(); ++k) out.push_back(q(k));
  return out;
}

// Uniform grid t_start + k dt, k = 0..n, with the end point included when it
// falls on the grid.
std::vector<double> time_grid(double t_start, double t_end, double dt) {
  const long n = long(std::floor((t_end - t_start) / dt * (1.0 + 1e-12)));
  std::vector<double> ts;
  for (long k = 0; k <= n; ++k) ts.push_back(t_start + k * dt);
  return ts;
}

struct Context {
  const json& cfg;
  Wavefunction wf;
  IntegratorSettings settings;
  int threads;
  RunSummary summary;

  void write(const std::string& name, std::string_view content) {
    const auto path = output_path(cfg, name);
    write_atomic(path, content);
    summary.files.push_back(path);
  }
};

// --- trajectory ---------------------------------------------------------------

void run_trajectory(Context& ctx) {
  const json& b = ctx.cfg["trajectory"];
  const double t0 = b["t0"], t1 = b["t1"];
  std::vector<Vec> starts;
  for (const auto& s : b["starts"]) starts.push_back(to_vec(s));
  const int dim = ctx.wf.spec.dim;

  std::vector<DeviationRun> runs(starts.size());
  parallel_for(starts.size(), ctx.threads, [&](std::size_t i) {
    Vec xi0 = Vec::Zero(dim);
    xi0(0) = 1.0;
    runs[i] = integrate_with_deviation(ctx.wf, starts[i], xi0, t0, t1, ctx.settings);
  });

  std::vector<std::string> cols{"t"};
  for (int k = 1; k <= dim; ++k) cols.push_back(fmt::format("q{}", k));
  cols.push_back("chi");
  const bool concatenated = b["layout"] == "concatenated";
  if (concatenated) cols.insert(cols.begin(), "id");

  const auto rows = [&](Csv& csv, std::size_t id) {
    for (const auto& s : runs[id].samples) {
      if (concatenated) csv.integer(long(id));
      csv.num(s.t);
      for (int k = 0; k < dim; ++k) csv.num(s.q(k));
      csv.num(s.t == t0 ? 0.0 : s.log_stretch / std::abs(s.t - t0));
      csv.end_row();
    }
  };
  if (concatenated) {
    Csv csv(cols);
    for (std::size_t i = 0; i < runs.size(); ++i) rows(csv, i);
    ctx.write("trajectory.csv", csv.text());
  } else {
    for (std::size_t i = 0; i < runs.size(); ++i) {
      Csv csv(cols);
      rows(csv, i);
      ctx.write(fmt::format("trajectory_{}.csv", i), csv.text());
    }
  }
  const auto& last = runs.front().samples.back();
  ctx.summary.key = "chi_end";
  ctx.summary.value = last.t == t0 ? 0.0 : last.log_stretch / std::abs(last.t - t0);
  ctx.summary.detail = fmt::format("{} trajectories to t={}", runs.size(), format_number(t1));
}

// --- nodal-scan ---------------------------------------------------------------

struct NodeAnalysis {
  NodalPoint node;
  std::optional<LocalExpansion> exp;
  std::optional<XPoint> x;
  double f3 = kNaN;
};

NodeAnalysis analyse(const Wavefunction& wf, const NodalPoint& nd) {
  NodeAnalysis a{nd, {}, {}, kNaN};
  if (nd.degenerate) return a;
  a.exp = local_expansion(wf, nd);
  const XPointResult xr = find_x_point(*a.exp, a.exp->boost);
  if (xr.found()) a.x = xr.saddles.front();
  try {
    a.f3 = f3_average(*a.exp, a.exp->boost).f3;
  } catch (const UndefinedAverageError&) {
  }
  return a;
}

void run_nodal_scan(Context& ctx) {
  const json& b = ctx.cfg["nodal-scan"];
  const auto r = doubles(b["region"]);
  const Region region{r[0], r[1], r[2], r[3]};
  const int grid = b["grid"];
  const auto ts = time_grid(b["t_start"], b["t_end"], b["dt"]);

  std::vector<std::vector<NodeAnalysis>> found(ts.size());
  parallel_for(ts.size(), ctx.threads, [&](std::size_t i) {
    for (const auto& nd : find_nodal_points(ctx.wf, ts[i], region, grid))
      found[i].push_back(analyse(ctx.wf, nd));
  });

  Csv csv({"t", "x0", "y0", "Vx", "Vy", "uX", "vX", "RX", "lambda1", "lambda2", "f3"});
  long rows = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    for (const auto& a : found[i]) {
      csv.num(ts[i]).num(a.node.pos.x()).num(a.node.pos.y()).num(a.node.vel.x()).num(a.node.vel.y());
      if (a.x)
        csv.num(a.x->pos.x()).num(a.x->pos.y()).num(a.x->R).num(a.x->lambda1).num(a.x->lambda2);
      else
        csv.num(kNaN).num(kNaN).num(kNaN).num(kNaN).num(kNaN);
      csv.num(a.f3);
      csv.end_row();
      ++rows;
    }
  }
  ctx.write("nodal_scan.csv", csv.text());
  ctx.summary.key = "nodal_rows";
  ctx.summary.value = double(rows);
  ctx.summary.detail = fmt::format("{} time steps", ts.size());

  const json& hopf = b["hopf"];
  if (hopf["enabled"].get<bool>()) {
    // Tracks start from the nodes of the first time step that has any.
    std::vector<Vec2> seeds;
    double t_seed = ts.front();
    for (std::size_t i = 0; i < ts.size() && seeds.empty(); ++i) {
      for (const auto& a : found[i]) seeds.push_back(a.node.pos);
      t_seed = ts[i];
    }
    std::vector<HopfCheck> checks;
    for (const auto& s : seeds) {
      if (!(b["t_end"].get<double>() > t_seed)) break;
      for (const auto& tr : track_node(ctx.wf, s, t_seed, b["t_end"], b["dt"]))
        for (const auto& c : hopf_checks(ctx.wf, tr, hopf["offset"], hopf["radius"])) {
          bool dup = false;
          for (const auto& o : checks) dup = dup || std::abs(o.event.t - c.event.t) < 1e-6;
          if (!dup) checks.push_back(c);
        }
    }
    std::sort(checks.begin(), checks.end(),
              [](const HopfCheck& x, const HopfCheck& y) { return x.event.t < y.event.t; });
    Csv ev({"t", "kind", "before", "after", "flipped"});
    int flipped = 0;
    for (const auto& c : checks) {
      ev.num(c.event.t)
          .str(c.event.kind == HopfEvent::Kind::attractor_to_repellor ? "attractor_to_repellor"
                                                                      : "repellor_to_attractor")
          .integer(c.before)
          .integer(c.after)
          .integer(c.flipped ? 1 : 0);
      ev.end_row();
      flipped += c.flipped;
    }
    ctx.write("hopf_events.csv", ev.text());
    ctx.summary.detail += fmt::format(", {} hopf events ({} flipped)", checks.size(), flipped);
  }

  const json& man = b["manifolds"];
  if (!man["times"].empty()) {
    Csv mc({"t", "node", "branch", "end", "u", "v"});
    for (double t : doubles(man["times"])) {
      int k = 0;
      for (const auto& nd : find_nodal_points(ctx.wf, t, region, grid)) {
        const NodeAnalysis a = analyse(ctx.wf, nd);
        if (a.x) {
          ManifoldOptions opt;
          opt.box_half_width = man["box_half_width_rx"].get<double>() * a.x->R;
          const ManifoldSet ms = trace_manifolds(
              *a.x, *a.exp, a.exp->boost, man["arc_length_rx"].get<double>() * a.x->R, opt);
          for (const auto& br : ms.branches)
            for (const auto& p : br.points) {
              mc.num(t).integer(k).str(br.label).str(to_string(br.end)).num(p.x()).num(p.y());
              mc.end_row();
            }
        }
        ++k;
      }
    }
    ctx.write("manifolds.csv", mc.text());
  }

  const json& sc = b["scattering"];
  if (!sc["times"].empty()) {
    const int n = sc["points"];
    const double smallest = sc["smallest"], decades = sc["decades"];
    std::vector<double> deltas;
    for (int k = 0; k < n; ++k) deltas.push_back(smallest * std::pow(10.0, decades * k / (n - 1)));
    Csv rows_csv({"t", "node", "delta", "amplification", "encountered"});
    Csv fit({"t", "node", "slope", "intercept", "V0", "ball_radius", "dropped"});
    for (double t : doubles(sc["times"])) {
      int k = 0;
      for (const auto& nd : find_nodal_points(ctx.wf, t, region, grid)) {
        const ScatteringResult res = scattering_amplification(ctx.wf, nd, deltas);
        for (const auto& row : res.rows) {
          rows_csv.num(t).integer(k).num(row.delta).num(row.amplification).integer(row.encountered);
          rows_csv.end_row();
        }
        fit.num(t).integer(k).num(res.slope).num(res.intercept).num(res.V0).num(res.ball_radius)
            .integer(res.dropped);
        fit.end_row();
        ++k;
      }
    }
    ctx.write("scattering.csv", rows_csv.text());
    ctx.write("scattering_fit.csv", fit.text());
  }
}

// --- nodal-line-3d ------------------------------------------------------------

void run_nodal_line_3d(Context& ctx) {
  const json& b = ctx.cfg["nodal-line-3d"];
  const double t = b["t"];
  NodalLineOptions opt;
  opt.step = b["step"];
  opt.min_step = b["min_step"];
  const double arc = b["arc_length"];

  std::vector<Vec3> seeds;
  double spacing = 0.0;
  if (!b["seed"].is_null()) {
    seeds.push_back(to_vec(b["seed"]));
  } else {
    // Grid points within one spacing of the zero set, in scan order.
    const auto box = doubles(b["scan"]["box"]);
    spacing = b["scan"]["step"];
    std::array<int, 3> n;
    for (int k = 0; k < 3; ++k) n[k] = int(std::floor((box[2 * k + 1] - box[2 * k]) / spacing)) + 1;
    for (int i = 0; i < n[0]; ++i)
      for (int j = 0; j < n[1]; ++j)
        for (int l = 0; l < n[2]; ++l) {
          Vec q(3);
          q << box[0] + i * spacing, box[2] + j * spacing, box[4] + l * spacing;
          const FieldSample f = eval_reduced(ctx.wf, q, t);
          const double g = f.grad.norm();
          if (g > 0.0 && std::abs(f.psi) / g < spacing) seeds.push_back(q);
        }
  }

  std::vector<NodalLine> lines;
  for (const auto& guess : seeds) {
    const auto p = refine_line_point(ctx.wf, t, guess);
    if (!p) continue;
    bool known = false;
    for (const auto& L : lines) {
      for (const auto& s : L.samples)
        if ((s.point - p->point).norm() < std::max(2.0 * opt.step, spacing)) {
          known = true;
          break;
        }
      if (known) break;
    }
    if (known) continue;
    lines.push_back(trace_nodal_line(ctx.wf, t, p->point, arc, opt));
    if (lines.size() >= 64) break;
  }

  const int stride = b["plane_stride"];
  const double probe = b["probe_radius"];
  Csv csv({"t", "x", "y", "z", "branch"});
  Csv planes({"t", "line", "sample", "x", "y", "z", "uX", "vX", "RX", "lambda1", "lambda2", "f3",
              "w_velocity", "inplane_speed"});
  double worst_ratio = 0.0;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const auto& L = lines[li];
    const std::string label = fmt::format("nodal-{}", li);
    for (const auto& s : L.samples) {
      csv.num(t).num(s.point.x()).num(s.point.y()).num(s.point.z()).str(label);
      csv.end_row();
    }
    std::vector<std::size_t> picks;
    for (std::size_t k = 0; k < L.samples.size(); k += stride) picks.push_back(k);
    std::vector<XLineSample> xs(picks.size());
    parallel_for(picks.size(), ctx.threads, [&](std::size_t m) {
      try {
        xs[m] = planar_complex(ctx.wf, L.samples[picks[m]], probe);
      } catch (const Error&) {
        // No usable plane section here; the X-line has a gap.
        xs[m].line = L.samples[picks[m]];
      }
    });
    for (std::size_t m = 0; m < xs.size(); ++m) {
      const auto& x = xs[m];
      const Vec3& p = x.line.point;
      planes.num(t).integer(long(li)).integer(long(picks[m])).num(p.x()).num(p.y()).num(p.z());
      if (x.xpoints.found()) {
        const auto& s = x.xpoints.saddles.front();
        planes.num(s.pos.x()).num(s.pos.y()).num(s.R).num(s.lambda1).num(s.lambda2);
      } else {
        planes.num(kNaN).num(kNaN).num(kNaN).num(kNaN).num(kNaN);
      }
      planes.num(x.f3.value_or(kNaN)).num(x.w_velocity).num(x.inplane_speed);
      planes.end_row();
      if (x.inplane_speed > 0.0)
        worst_ratio = std::max(worst_ratio, std::abs(x.w_velocity) / x.inplane_speed);
    }
    const auto segs = assemble_x_line(xs).segments();
    for (std::size_t si = 0; si < segs.size(); ++si)
      for (const auto& p : segs[si]) {
        csv.num(t).num(p.x()).num(p.y()).num(p.z()).str(fmt::format("xline-{}-{}", li, si));
        csv.end_row();
      }
  }
  ctx.write("nodal_lines.csv", csv.text());
  ctx.write("nodal_planes.csv", planes.text());
  ctx.summary.key = "lines";
  ctx.summary.value = double(lines.size());
  ctx.summary.detail = fmt::format("max |w|/in-plane speed {}", format_number(worst_ratio));
}

// --- series-check -------------------------------------------------------------

void run_series_check(Context& ctx) {
  const json& b = ctx.cfg["series-check"];
  SeriesParams p;
  p.a = ctx.wf.a;
  p.b = ctx.wf.b;
  p.c = ctx.wf.c;
  const bool central = b["kind"] == "central";
  const SeriesKind kind = central ? SeriesKind::central : SeriesKind::diagonal;
  p.x0 = b["x0"];
  p.y0 = b["y0"];
  if (!central) check_diagonal(p);
  const double t_end = b["t_end"];
  const double err = series_max_error(p, kind, t_end, ctx.settings, b["dt"]);
  const ScalingReport sc = series_scaling(p, kind, t_end, ctx.settings);

  json report;
  report["params"] = {{"kind", b["kind"]}, {"a", p.a}, {"b", p.b}, {"c", p.c},
                      {"x0", p.x0},       {"y0", p.y0}, {"t_end", t_end}};
  report["max_error"] = err;
  report["scaling_factor_measured"] = sc.factor;
  report["scaling"] = {{"error_base", sc.error_base},
                       {"error_scaled", sc.error_scaled},
                       {"expected", {sc.expected_low, sc.expected_high}},
                       {"scaled_params",
                        {{"a", sc.scaled.a}, {"b", sc.scaled.b}, {"x0", sc.scaled.x0},
                         {"y0", sc.scaled.y0}}}};
  report["verdict"] = sc.pass ? "pass" : "fail";

  const auto starts = b["certify"];
  if (!starts.empty()) {
    std::vector<OrderReport> cert(starts.size());
    parallel_for(starts.size(), ctx.threads, [&](std::size_t i) {
      const auto q = doubles(starts[i]);
      cert[i] = certify_ordered(ctx.wf, Vec2(q[0], q[1]), b["certify_t_end"], ctx.settings);
    });
    json arr = json::array();
    for (std::size_t i = 0; i < cert.size(); ++i)
      arr.push_back({{"start", starts[i]},
                     {"ordered", cert[i].ordered},
                     {"min_distance", cert[i].min_distance},
                     {"t_min_distance", cert[i].t_min_distance},
                     {"chi_end", cert[i].chi_end}});
    report["certify"] = arr;
  }
  ctx.write("series_check.json", report.dump(2) + "\n");
  ctx.summary.key = "scaling_factor";
  ctx.summary.value = sc.factor;
  ctx.summary.detail = fmt::format("{} series, max error {}, verdict {}", b["kind"].get<std::string>(),
                                   format_number(err), sc.pass ? "pass" : "fail");
}

// --- invariant-check ----------------------------------------------------------

// Point on the level set C, with the non-log axes drawn from the box and the
// log axis solved for on its positive side, past the minimum of
// c s^2 + L ln s.
std::optional<Vec> level_set_point(const InvariantSpec& inv, double C, const std::vector<double>& box,
                                   std::mt19937_64& rng) {
  const int ax = inv.log_axis;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Vec q(3);
    double rhs = C;
    for (int k = 0; k < 3; ++k) {
      if (k == ax) continue;
      q(k) = std::uniform_real_distribution<double>(box[2 * k], box[2 * k + 1])(rng);
      rhs -= inv.c[k] * q(k) * q(k);
    }
    const double ck = inv.c[ax], L = inv.log_coef;
    const auto g = [&](double s) { return ck * s * s + L * std::log(s) - rhs; };
    double lo = (ck > 0.0 && L < 0.0) ? std::sqrt(-L / (2.0 * ck)) : 1e-12;
    if (g(lo) > 0.0) continue;
    double hi = std::max(2.0 * lo, 1.0);
    while (g(hi) < 0.0 && hi < 1e6) hi *= 2.0;
    if (g(hi) < 0.0) continue;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (g(mid) < 0.0 ? lo : hi) = mid;
    }
    q(ax) = 0.5 * (lo + hi);
    return q;
  }
  return std::nullopt;
}

struct DriftRun {
  Vec start;
  double C0 = kNaN;
  double max_drift = kNaN;
  bool crossed = false;
  double t_cross = kNaN;
  std::string failure;
};

std::vector<DriftRun> drift_runs(Context& ctx, const InvariantSpec& inv, const std::vector<Vec>& starts,
                                 double t0, double t1, double interval) {
  std::vector<DriftRun> out(starts.size());
  parallel_for(starts.size(), ctx.threads, [&](std::size_t i) {
    DriftRun& r = out[i];
    r.start = starts[i];
    try {
      r.C0 = invariant_value(inv, starts[i]);
      const auto rep = check_conservation(ctx.wf, inv, starts[i], t0, t1, ctx.settings, interval);
      r.max_drift = rep.max_drift;
    } catch (const SingularInvariantError& e) {
      r.crossed = true;
      r.t_cross = e.t;
    } catch (const NodeProximityError& e) {
      r.failure = e.what();
    } catch (const StiffEncounterError& e) {
      r.failure = e.what();
    }
  });
  return out;
}

json drift_json(const std::vector<DriftRun>& runs, double& max_drift, double& min_drift,
                int& crossings, int& failed) {
  json arr = json::array();
  max_drift = 0.0;
  min_drift = std::numeric_limits<double>::infinity();
  crossings = failed = 0;
  for (const auto& r : runs) {
    json j = {{"start", vec_json(r.start)}, {"C0", r.C0}};
    if (r.crossed) {
      ++crossings;
      j["crossing_t"] = r.t_cross;
    } else if (!r.failure.empty()) {
      ++failed;
      j["failure"] = r.failure;
    } else {
      j["max_drift"] = r.max_drift;
      max_drift = std::max(max_drift, r.max_drift);
      min_drift = std::min(min_drift, r.max_drift);
    }
    arr.push_back(j);
  }
  if (!std::isfinite(min_drift)) min_drift = kNaN;
  return arr;
}

void run_invariant_check(Context& ctx) {
  const json& b = ctx.cfg["invariant-check"];
  InvariantSpec inv;
  const auto cs = doubles(b["invariant"]["c"]);
  inv.c = {cs[0], cs[1], cs[2]};
  inv.log_coef = b["invariant"]["log_coef"];
  inv.log_axis = b["invariant"]["log_axis"];
  const double t0 = b["t0"], t1 = b["t1"], interval = b["sample_interval"];

  std::mt19937_64 rng(ctx.cfg["seed"].get<std::uint64_t>());
  std::vector<Vec> starts;
  for (const auto& s : b["starts"]) starts.push_back(to_vec(s));
  const auto box = doubles(b["random"]["box"]);
  const int n_random = b["random"]["count"];
  for (int i = 0; i < n_random; ++i) {
    Vec q(3);
    for (int k = 0; k < 3; ++k)
      q(k) = std::uniform_real_distribution<double>(box[2 * k], box[2 * k + 1])(rng);
    starts.push_back(q);
  }
  const double C_level = b["level_set"]["C"];
  const int n_level = b["level_set"]["count"];
  for (int i = 0; i < n_level; ++i) {
    auto q = level_set_point(inv, C_level, box, rng);
    if (!q) throw ExperimentError(fmt::format("no start found on the level set C = {}", C_level));
    starts.push_back(*q);
  }
  if (starts.empty()) throw ExperimentError("invariant-check has no initial conditions");

  json combo = json::array();
  for (const auto& term : ctx.wf.terms) combo.push_back({term.n[0], term.n[1], term.n[2]});

  json report;
  report["combo"] = combo;
  report["invariant"] = b["invariant"];
  double max_drift, min_drift;
  int crossings, failed;
  const auto runs = drift_runs(ctx, inv, starts, t0, t1, interval);
  report["runs"] = drift_json(runs, max_drift, min_drift, crossings, failed);
  report["C0"] = runs.front().C0;
  report["max_drift"] = max_drift;
  report["crossings"] = crossings;
  report["failed"] = failed;

  if (b["control"].get<bool>()) {
    InvariantSpec flipped = inv;
    flipped.log_coef = -inv.log_coef;
    double cmax, cmin;
    int ccross, cfail;
    const json arr = drift_json(drift_runs(ctx, flipped, starts, t0, t1, interval), cmax, cmin,
                                ccross, cfail);
    report["control"] = {{"log_coef", flipped.log_coef},
                         {"max_drift", cmax},
                         {"min_drift", cmin},
                         {"crossings", ccross},
                         {"failed", cfail},
                         {"runs", arr}};
  }

  const json& pr = b["probe"];
  if (pr["enabled"].get<bool>()) {
    std::vector<Vec> ps(starts.begin(),
                        starts.begin() + std::min<std::size_t>(starts.size(), pr["count"].get<int>()));
    const ProbeReport p = partial_integrability_probe(ctx.wf, ps, t0, pr["t1"], ctx.settings, 0.05,
                                                      ctx.threads);
    report["probe"] = {{"score", p.score},
                       {"basis", p.basis},
                       {"coefficients", p.coefficients},
                       {"trajectories", p.trajectories},
                       {"dropped", p.dropped}};
  }
  ctx.write("invariant_check.json", report.dump(2) + "\n");
  ctx.summary.key = "max_drift";
  ctx.summary.value = max_drift;
  ctx.summary.detail = fmt::format("{} trajectories, {} crossings, {} failed", starts.size(),
                                   crossings, failed);
}

// --- relax --------------------------------------------------------------------

void run_relax(Context& ctx) {
  const json& b = ctx.cfg["relax"];
  RelaxationConfig rc;
  rc.wf = ctx.wf;
  rc.ensemble = build_ensemble(b["ensemble"], ctx.cfg["seed"].get<std::uint64_t>());
  rc.grid = build_grid(b["grid"]);
  rc.t0 = b["t0"];
  rc.times = doubles(b["times"]);
  rc.settings = ctx.settings;
  rc.threads = ctx.threads;
  rc.keep_grids = b["dump_grids"];
  const RelaxationSeries s = run_relaxation(rc);

  Csv csv({"t", "D", "Hs", "anomaly_cells", "n_failed", "hull_area"});
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    csv.num(s.times[k]).num(s.D[k]).num(s.H[k]).integer(s.anomalies[k]).integer(s.failed)
        .num(s.hull_area[k]);
    csv.end_row();
  }
  ctx.write("relax.csv", csv.text());

  // Matrices with rows along y and columns along x, bottom row first.
  for (std::size_t k = 0; k < s.grids.size(); ++k) {
    const DensityGrid& g = s.grids[k];
    for (int which = 0; which < 2; ++which) {
      const auto& field = which == 0 ? g.Ps : g.psi_sq;
      std::string text;
      for (int j = 0; j < g.n; ++j) {
        for (int i = 0; i < g.n; ++i) {
          if (i) text += ',';
          text += format_number(field[std::size_t(i) * g.n + j]);
        }
        text += '\n';
      }
      ctx.write(fmt::format("relax_grid_{:03}_{}.csv", k, which == 0 ? "Ps" : "psi_sq"), text);
    }
  }
  ctx.summary.key = "D_ratio";
  ctx.summary.value = s.D.back() / s.D.front();
  ctx.summary.detail = fmt::format("{} particles, {} failed, D(t0)={}, D(t_end)={}", s.particles,
                                   s.failed, format_number(s.D.front()), format_number(s.D.back()));
}

}  // namespace

std::filesystem::path output_path(const json& resolved, const std::string& name) {
  return std::filesystem::path(resolved["output"]["dir"].get<std::string>()) /
         (resolved["output"]["prefix"].get<std::string>() + name);
}

std::string dump_config(const json& resolved) { return resolved.dump(2) + "\n"; }

RunSummary run_scenario(const json& resolved) {
  Context ctx{resolved, build_model(resolved["model"]), build_integrator(resolved["integrator"]),
              resolved["threads"].get<int>(), {}};
  ctx.summary.scenario = resolved["scenario"];
  ctx.write("resolved_config.json", dump_config(resolved));

  const std::string& sc = ctx.summary.scenario;
  if (sc == "trajectory")
    run_trajectory(ctx);
  else if (sc == "nodal-scan")
    run_nodal_scan(ctx);
  else if (sc == "nodal-line-3d")
    run_nodal_line_3d(ctx);
  else if (sc == "series-check")
    run_series_check(ctx);
  else if (sc == "invariant-check")
    run_invariant_check(ctx);
  else if (sc == "relax")
    run_relax(ctx);
  else
    throw ConfigError("unknown scenario '" + sc + "'");
  return ctx.summary;
}

}  // namespace bohm::app
