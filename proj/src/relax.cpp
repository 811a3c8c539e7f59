#include "bohm/relax.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <boost/geometry/geometries/multi_point.hpp>

#include "bohm/errors.hpp"
#include "bohm/parallel.hpp"

namespace bohm {

Box2 Box2::centered(const Vec2& c, double side) {
  return {c.x() - 0.5 * side, c.x() + 0.5 * side, c.y() - 0.5 * side, c.y() + 0.5 * side};
}

Box2 default_box(const Wavefunction& wf) {
  if (wf.spec.dim != 2) throw InputError("relaxation grids are two-dimensional");
  const double w = 4.0 / std::min(wf.spec.scale(0), wf.spec.scale(1));
  return {-w, w, -w, w};
}

void EnsembleSpec::validate() const {
  if (count < 1) throw InputError("ensemble needs at least one particle");
  switch (sampler) {
    case SamplerKind::uniform_box:
      if (!(side > 0.0)) throw InputError("ensemble box side must be positive");
      break;
    case SamplerKind::grid_lattice:
      if (!(side > 0.0)) throw InputError("ensemble box side must be positive");
      if (lattice_n < 1) throw InputError("lattice needs at least one point per side");
      break;
    case SamplerKind::born_rule:
      if (!(region.width() >= 0.0) || !(region.height() >= 0.0))
        throw InputError("born-rule region is inverted");
      break;
  }
}

std::vector<Vec2> sample_ensemble(const EnsembleSpec& spec, const Wavefunction& wf, double t0) {
  spec.validate();
  if (wf.spec.dim != 2) throw InputError("ensembles are two-dimensional");
  std::vector<Vec2> out;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  if (spec.sampler == SamplerKind::grid_lattice) {
    const Box2 b = Box2::centered(spec.center, spec.side);
    const int n = spec.lattice_n;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        out.emplace_back(b.xmin + (i + 0.5) * b.width() / n, b.ymin + (j + 0.5) * b.height() / n);
    return out;
  }

  out.reserve(spec.count);
  if (spec.sampler == SamplerKind::uniform_box) {
    const Box2 b = Box2::centered(spec.center, spec.side);
    for (long k = 0; k < spec.count; ++k)
      out.emplace_back(b.xmin + b.width() * unit(rng), b.ymin + b.height() * unit(rng));
    return out;
  }

  const Box2 b = spec.region.empty() ? default_box(wf) : spec.region;
  const double bound = density_bound(wf);
  long trials = 0;
  while (long(out.size()) < spec.count) {
    Vec q(2);
    q << b.xmin + b.width() * unit(rng), b.ymin + b.height() * unit(rng);
    ++trials;
    if (unit(rng) * bound < density(wf, q, t0)) out.emplace_back(q[0], q[1]);
    if (trials >= 1'000'000 && double(out.size()) < 1e-4 * double(trials))
      throw EnvelopeError("born-rule rejection acceptance fell below 1e-4");
  }
  return out;
}

Vec2 DensityGrid::center(int i, int j) const {
  return {box.xmin + (i + 0.5) * box.width() / n, box.ymin + (j + 0.5) * box.height() / n};
}

namespace {

void normalize(std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  if (s > 0.0)
    for (double& x : v) x /= s;
}

// Midpoint quadrature of |psi|^2 on a fine lattice reaching 5 sigma past the
// box, then the kernel summed directly over it.
void smooth_reference(DensityGrid& g, const Wavefunction& wf, int sub) {
  if (sub < 1) throw InputError("need at least one quadrature point per cell");
  const int n = g.n;
  const double reach = 5.0 * g.sigma;
  const double hx = g.box.width() / (n * sub), hy = g.box.height() / (n * sub);
  const int mx = int(std::ceil(reach / hx)), my = int(std::ceil(reach / hy));
  const int fx = n * sub + 2 * mx, fy = n * sub + 2 * my;
  const auto fine_x = [&](int a) { return g.box.xmin + (a - mx + 0.5) * hx; };
  const auto fine_y = [&](int b) { return g.box.ymin + (b - my + 0.5) * hy; };
  Eigen::MatrixXd rho(fx, fy);
  Vec q(2);
  for (int a = 0; a < fx; ++a)
    for (int b = 0; b < fy; ++b) {
      q << fine_x(a), fine_y(b);
      rho(a, b) = density(wf, q, g.t);
    }
  const double s2 = 2.0 * g.sigma * g.sigma;
  const double r2 = reach * reach;
  const auto kernel = [&](double d) { return d * d <= r2 ? std::exp(-d * d / s2) : 0.0; };
  Eigen::MatrixXd Kx(n, fx), Ky(n, fy);
  for (int i = 0; i < n; ++i) {
    const Vec2 c = g.center(i, i);
    for (int a = 0; a < fx; ++a) Kx(i, a) = kernel(c.x() - fine_x(a));
    for (int b = 0; b < fy; ++b) Ky(i, b) = kernel(c.y() - fine_y(b));
  }
  // Same disk-truncated kernel as the particles.
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Vec2 c = g.center(i, j);
      double acc = 0.0;
      for (int a = 0; a < fx; ++a) {
        if (Kx(i, a) == 0.0) continue;
        const double ex = c.x() - fine_x(a);
        double row = 0.0;
        for (int b = 0; b < fy; ++b) {
          const double ey = c.y() - fine_y(b);
          if (ex * ex + ey * ey <= r2) row += Ky(j, b) * rho(a, b);
        }
        acc += Kx(i, a) * row;
      }
      g.psi_sq[std::size_t(i) * n + j] = acc;
    }
}

}  // namespace

DensityGrid smoothed_density(const std::vector<Vec2>& positions, const GridSpec& spec,
                             const Wavefunction& wf, double t) {
  if (positions.empty()) throw InputError("smoothed density needs at least one position");
  if (spec.n < 1) throw InputError("grid needs at least one cell per side");
  DensityGrid g;
  g.box = spec.box.empty() ? default_box(wf) : spec.box;
  g.n = spec.n;
  g.t = t;
  const int n = g.n;
  const double dx = g.box.width() / n, dy = g.box.height() / n;
  g.sigma = spec.sigma > 0.0 ? spec.sigma : dx;
  if (!(g.sigma > 0.0)) throw InputError("smoothing length must be positive");
  g.Ps.assign(std::size_t(n) * n, 0.0);
  g.psi_sq.assign(std::size_t(n) * n, 0.0);

  const double s2 = 2.0 * g.sigma * g.sigma;
  const double reach = 5.0 * g.sigma;
  std::vector<double> wx(n), wy(n);
  for (const Vec2& p : positions) {
    const int i0 = std::max(0, int(std::floor((p.x() - reach - g.box.xmin) / dx)));
    const int i1 = std::min(n - 1, int(std::floor((p.x() + reach - g.box.xmin) / dx)));
    const int j0 = std::max(0, int(std::floor((p.y() - reach - g.box.ymin) / dy)));
    const int j1 = std::min(n - 1, int(std::floor((p.y() + reach - g.box.ymin) / dy)));
    if (i0 > i1 || j0 > j1) continue;
    for (int i = i0; i <= i1; ++i) {
      const double d = g.box.xmin + (i + 0.5) * dx - p.x();
      wx[i] = d * d <= reach * reach ? std::exp(-d * d / s2) : 0.0;
    }
    for (int j = j0; j <= j1; ++j) {
      const double d = g.box.ymin + (j + 0.5) * dy - p.y();
      wy[j] = d * d <= reach * reach ? std::exp(-d * d / s2) : 0.0;
    }
    for (int i = i0; i <= i1; ++i) {
      if (wx[i] == 0.0) continue;
      const double ex = g.box.xmin + (i + 0.5) * dx - p.x();
      double* row = &g.Ps[std::size_t(i) * n];
      for (int j = j0; j <= j1; ++j) {
        const double ey = g.box.ymin + (j + 0.5) * dy - p.y();
        if (ex * ex + ey * ey <= reach * reach) row[j] += wx[i] * wy[j];
      }
    }
  }
  if (spec.reference == Reference::point) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const Vec2 c = g.center(i, j);
        Vec q(2);
        q << c.x(), c.y();
        g.psi_sq[std::size_t(i) * n + j] = density(wf, q, t);
      }
  } else {
    smooth_reference(g, wf, spec.subdivisions);
  }
  normalize(g.Ps);
  normalize(g.psi_sq);
  return g;
}

double density_difference(const DensityGrid& grid) {
  double D = 0.0;
  for (std::size_t k = 0; k < grid.Ps.size(); ++k) D += std::abs(grid.Ps[k] - grid.psi_sq[k]);
  return D;
}

HValue h_function(const DensityGrid& grid) {
  HValue h;
  for (std::size_t k = 0; k < grid.Ps.size(); ++k) {
    const double p = grid.Ps[k], r = grid.psi_sq[k];
    if (p <= 0.0) continue;
    if (r <= 0.0) {
      ++h.anomalies;
      continue;
    }
    h.H += p * std::log(p / r);
  }
  return h;
}

double convex_hull_area(const std::vector<Vec2>& positions) {
  namespace bg = boost::geometry;
  using Point = bg::model::d2::point_xy<double>;
  if (positions.size() < 3) return 0.0;
  bg::model::multi_point<Point> pts;
  pts.reserve(positions.size());
  for (const Vec2& p : positions) pts.emplace_back(p.x(), p.y());
  bg::model::polygon<Point> hull;
  bg::convex_hull(pts, hull);
  return std::abs(bg::area(hull));
}

std::vector<double> geometric_snapshots(double t_end) {
  if (!(t_end >= 0.0)) throw InputError("snapshot horizon must be non-negative");
  std::vector<double> out{0.0};
  const double mant[] = {1.0, 2.0, 5.0};
  for (double dec = 1.0; dec <= t_end; dec *= 10.0)
    for (double m : mant)
      if (m * dec < t_end) out.push_back(m * dec);
  if (t_end > 0.0) out.push_back(t_end);
  return out;
}

RelaxationSeries run_relaxation(const RelaxationConfig& cfg) {
  if (cfg.wf.spec.dim != 2) throw InputError("relaxation runs are two-dimensional");
  if (cfg.times.empty()) throw InputError("no snapshot times");
  for (std::size_t k = 0; k < cfg.times.size(); ++k) {
    if (!(cfg.times[k] >= cfg.t0)) throw InputError("snapshot times must not precede t0");
    if (k > 0 && !(cfg.times[k] > cfg.times[k - 1]))
      throw InputError("snapshot times must increase");
  }
  cfg.settings.validate();

  const std::vector<Vec2> start = sample_ensemble(cfg.ensemble, cfg.wf, cfg.t0);
  const std::size_t N = start.size();
  const std::size_t T = cfg.times.size();
  // pos[i * T + k]: particle i at snapshot k
  std::vector<Vec2> pos(N * T, Vec2::Zero());
  std::vector<char> ok(N, 0);
  parallel_for(N, cfg.threads, [&](std::size_t i) {
    try {
      Vec q0(2);
      q0 << start[i].x(), start[i].y();
      const auto path = integrate_to(cfg.wf, q0, cfg.t0, cfg.times, cfg.settings);
      for (std::size_t k = 0; k < T; ++k) pos[i * T + k] = Vec2(path[k][0], path[k][1]);
      ok[i] = 1;
    } catch (const NodeProximityError&) {
    } catch (const StiffEncounterError&) {
    }
  });

  RelaxationSeries out;
  out.particles = long(N);
  for (char c : ok) out.failed += c ? 0 : 1;
  if (double(out.failed) > 0.01 * double(N))
    throw ExperimentError(std::to_string(out.failed) + " of " + std::to_string(N) +
                          " trajectories failed (more than 1%)");
  if (out.failed == long(N)) throw ExperimentError("every trajectory failed");

  for (std::size_t k = 0; k < T; ++k) {
    std::vector<Vec2> snap;
    snap.reserve(N);
    for (std::size_t i = 0; i < N; ++i)
      if (ok[i]) snap.push_back(pos[i * T + k]);
    const DensityGrid g = smoothed_density(snap, cfg.grid, cfg.wf, cfg.times[k]);
    const HValue h = h_function(g);
    out.times.push_back(cfg.times[k]);
    out.D.push_back(density_difference(g));
    out.H.push_back(h.H);
    out.anomalies.push_back(h.anomalies);
    out.hull_area.push_back(convex_hull_area(snap));
    if (cfg.keep_grids) out.grids.push_back(g);
    if (cfg.keep_positions) out.positions.push_back(std::move(snap));
  }
  return out;
}

}  // namespace bohm
