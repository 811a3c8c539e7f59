#include <algorithm>
#include <cmath>
#include <limits>

#include "bohm/errors.hpp"
#include "bohm/nodal2d.hpp"
#include "bohm/rk45.hpp"

namespace bohm {

namespace {

struct ArcFlow {
  const LocalExpansion& exp;
  const Vec2& vel;
  double sigma;
  State operator()(double, const State& y) const {
    const Vec2 w = frame_field(exp, vel, y[0], y[1]);
    const double n = w.norm();
    State dy(2);
    dy << sigma * w.x() / n, sigma * w.y() / n;
    return dy;
  }
};

RkOptions arc_options(double rel_tol, double scale) {
  RkOptions o;
  o.rel_tol = rel_tol;
  o.abs_tol = rel_tol * scale * 1e-3;
  o.max_step = 0.05 * scale;
  // Normalized flow chatters at stagnation points; give up there.
  o.min_step = 1e-9 * scale;
  o.max_steps = 200000;
  return o;
}

// Fixed point of the return map near R, or a negative value when none.
double cycle_near(const LocalExpansion& exp, const Vec2& vel, double R, double phi0, int dir) {
  const auto m = [&](double r) { return return_map(exp, vel, r, phi0, dir) - r; };
  const int n = 9;
  double r_prev = 0.75 * R, m_prev = m(r_prev);
  for (int i = 1; i < n; ++i) {
    const double r = 0.75 * R + 0.5 * R * i / (n - 1);
    const double mr = m(r);
    if ((mr > 0.0) != (m_prev > 0.0)) {
      double lo = r_prev, hi = r, mlo = m_prev;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double mm = m(mid);
        if ((mm > 0.0) == (mlo > 0.0)) {
          lo = mid;
          mlo = mm;
        } else {
          hi = mid;
        }
      }
      return 0.5 * (lo + hi);
    }
    r_prev = r;
    m_prev = mr;
  }
  return -1.0;
}

// True when every loop inside R contracts, all the way down to the node.
bool contracts_to_node(const LocalExpansion& exp, const Vec2& vel, double R, double phi0,
                       int dir) {
  for (int i = 0; i <= 24; ++i) {
    const double r = R * std::pow(1e-3, i / 24.0);
    if (!(return_map(exp, vel, r, phi0, dir) < r)) return false;
  }
  return true;
}

ManifoldBranch trace_branch(const std::string& label, const XPoint& xp, const Vec2& dir,
                            double sigma, const LocalExpansion& exp, const Vec2& vel,
                            double arc_length, const ManifoldOptions& opt, double f3) {
  ManifoldBranch br;
  br.label = label;
  const double scale = std::max(xp.R, 1e-12);
  const double box = opt.box_half_width > 0.0 ? opt.box_half_width : 20.0 * xp.R;
  const int tdir = sigma > 0.0 ? 1 : -1;

  State y(2);
  y << xp.pos.x() + opt.offset * dir.x(), xp.pos.y() + opt.offset * dir.y();
  br.points.push_back(xp.pos);
  br.points.push_back(Vec2(y[0], y[1]));

  auto sys = make_system(ArcFlow{exp, vel, sigma});
  DormandPrince<decltype(sys)> rk(sys, 0.0, y, arc_options(opt.rel_tol, scale));

  double phi = std::atan2(y[1], y[0]);
  const double phi0 = phi;
  double phi_acc = 0.0;
  int loops = 0;
  double s = 0.0;
  double ds = opt.offset;
  const double chunk = scale / 100.0;
  br.end = BranchEnd::arc_length;
  while (s < arc_length) {
    const double s_next = std::min(arc_length, s + std::min(ds, chunk));
    ds *= 2.0;
    const Vec2 prev(rk.y()[0], rk.y()[1]);
    try {
      rk.advance_to(s_next);
    } catch (const Error&) {
      br.end = Vec2(rk.y()[0], rk.y()[1]).norm() < 1e-3 * scale ? BranchEnd::node
                                                                 : BranchEnd::singular;
      break;
    }
    s = s_next;
    const Vec2 z(rk.y()[0], rk.y()[1]);
    br.points.push_back(z);
    if (std::max(std::abs(z.x()), std::abs(z.y())) > box) {
      br.end = BranchEnd::left_box;
      break;
    }
    const double R = z.norm();
    if (R < 1e-6) {
      br.end = BranchEnd::node;
      break;
    }
    // Unwrapped azimuth about the node; one loop per full turn.
    double dphi = std::atan2(z.y(), z.x()) - phi;
    while (dphi > kPi) dphi -= 2.0 * kPi;
    while (dphi < -kPi) dphi += 2.0 * kPi;
    phi += dphi;
    const double before = phi_acc;
    phi_acc += dphi;
    if (std::floor(std::abs(phi_acc) / (2.0 * kPi)) > std::floor(std::abs(before) / (2.0 * kPi))) {
      const double target = 2.0 * kPi * (loops + 1);
      const double frac = (target - std::abs(before)) / std::abs(dphi);
      br.loop_radii.push_back(prev.norm() + frac * (R - prev.norm()));
      ++loops;
      const int k = int(br.loop_radii.size());
      const double Rk = br.loop_radii.back();
      if (k >= opt.loops_needed) {
        try {
          if (tdir * f3 < 0.0 && contracts_to_node(exp, vel, Rk, phi0, tdir)) {
            br.end = BranchEnd::node;
            break;
          }
        } catch (const Error&) {
        }
      }
      if (k > opt.loops_needed) {
        bool settled = true;
        for (int j = k - opt.loops_needed; j < k; ++j)
          settled = settled && std::abs(br.loop_radii[j] - br.loop_radii[j - 1]) < opt.loop_tol;
        if (settled) {
          try {
            const double rc = cycle_near(exp, vel, Rk, phi0, tdir);
            if (rc > 0.0 && std::abs(rc - Rk) < 0.1 * Rk) {
              br.end = BranchEnd::limit_cycle;
              br.cycle_radius = rc;
              break;
            }
          } catch (const Error&) {
          }
        }
      }
    }
  }
  br.end_distance = br.points.back().norm();
  br.spiral = br.end == BranchEnd::node || br.end == BranchEnd::limit_cycle;
  return br;
}

}  // namespace

const char* to_string(BranchEnd end) {
  switch (end) {
    case BranchEnd::arc_length: return "arc_length";
    case BranchEnd::node: return "node";
    case BranchEnd::limit_cycle: return "limit_cycle";
    case BranchEnd::left_box: return "left_box";
    case BranchEnd::singular: return "singular";
  }
  return "unknown";
}

ManifoldSet trace_manifolds(const XPoint& xp, const LocalExpansion& exp, const Vec2& vel,
                            double arc_length, const ManifoldOptions& options) {
  if (!(xp.e_unstable.norm() > 0.0) || !(xp.e_stable.norm() > 0.0))
    throw InputError("X-point has no eigenvectors");
  if (!(arc_length > 0.0)) throw InputError("arc length must be positive");
  double f3 = 0.0;
  try {
    f3 = f3_average(exp, vel).f3;
  } catch (const UndefinedAverageError&) {
  }
  ManifoldSet set;
  set.branches[0] = trace_branch("U", xp, xp.e_unstable, 1.0, exp, vel, arc_length, options, f3);
  set.branches[1] = trace_branch("UU", xp, -xp.e_unstable, 1.0, exp, vel, arc_length, options, f3);
  set.branches[2] = trace_branch("S", xp, xp.e_stable, -1.0, exp, vel, arc_length, options, f3);
  set.branches[3] = trace_branch("SS", xp, -xp.e_stable, -1.0, exp, vel, arc_length, options, f3);
  return set;
}

// --- scattering ---------------------------------------------------------------

namespace {

struct TangentFlow {
  const LocalExpansion& exp;
  const Vec2& vel;
  State operator()(double, const State& y) const {
    const Vec2 w = frame_field(exp, vel, y[0], y[1]);
    const Mat2 J = frame_field_jacobian(exp, vel, y[0], y[1]);
    const Vec2 xi = J * Vec2(y[2], y[3]);
    State dy(4);
    dy << w.x(), w.y(), xi.x(), xi.y();
    return dy;
  }
};

// Point where the stable manifold (followed backward from the X-point)
// crosses the circle of radius rb around it.
Vec2 stable_entry(const XPoint& xp, const LocalExpansion& exp, const Vec2& vel, double rb) {
  const double off = 1e-9 * xp.R;
  State y0(2);
  y0 << xp.pos.x() + off * xp.e_stable.x(), xp.pos.y() + off * xp.e_stable.y();
  auto sys = make_system(ArcFlow{exp, vel, -1.0});
  const RkOptions opt = arc_options(1e-12, xp.R);
  DormandPrince<decltype(sys)> rk(sys, 0.0, y0, opt);
  const double chunk = rb / 200.0;
  double s = 0.0;
  const auto dist = [&](const State& y) { return (Vec2(y[0], y[1]) - xp.pos).norm(); };
  while (dist(rk.y()) < rb) {
    if (s > 10.0 * rb) throw ExperimentError("stable manifold does not leave the X-point ball");
    s += chunk;
    rk.advance_to(s);
  }
  double lo = s - chunk, hi = s;
  for (int it = 0; it < 50; ++it) {
    const double mid = 0.5 * (lo + hi);
    DormandPrince<decltype(sys)> r2(sys, 0.0, y0, opt);
    r2.advance_to(mid);
    if (dist(r2.y()) < rb)
      lo = mid;
    else
      hi = mid;
  }
  DormandPrince<decltype(sys)> r3(sys, 0.0, y0, opt);
  r3.advance_to(0.5 * (lo + hi));
  return Vec2(r3.y()[0], r3.y()[1]);
}

}  // namespace

ScatteringResult scattering_amplification(const Wavefunction& wf, const NodalPoint& node,
                                          const std::vector<double>& deltas, double ball_radius) {
  if (deltas.size() < 2) throw InputError("need at least two impact parameters");
  const LocalExpansion exp = local_expansion(wf, node);
  const Vec2 vel = exp.boost;
  const XPointResult xr = find_x_point(exp, vel);
  if (!xr.found()) throw ExperimentError("no X-point at this instant");
  const XPoint& xp = xr.saddles.front();
  const double rb = ball_radius > 0.0 ? ball_radius : 0.3 * xp.R;

  ScatteringResult res;
  res.V0 = vel.norm();
  res.ball_radius = rb;
  const Vec2 entry = stable_entry(xp, exp, vel, rb);
  const Vec2 w_in = frame_field(exp, vel, entry.x(), entry.y());
  const Vec2 normal(-w_in.y() / w_in.norm(), w_in.x() / w_in.norm());
  const double dt = 0.02 / xp.lambda1;

  for (double delta : deltas) {
    ScatteringRow row;
    row.delta = delta;
    State y(4);
    const Vec2 z0 = entry + delta * normal;
    y << z0.x(), z0.y(), normal.x(), normal.y();
    auto sys = make_system(TangentFlow{exp, vel});
    RkOptions opt;
    opt.rel_tol = 1e-11;
    opt.abs_tol = 1e-14 * xp.R;
    try {
      DormandPrince<decltype(sys)> rk(sys, 0.0, y, opt);
      const double t_max = 40.0 * (std::log(rb / std::max(delta, 1e-300)) + 5.0) / xp.lambda1;
      bool inside = false;
      double d_prev = rb, lx_prev = 0.0;
      double t = 0.0;
      while (t < t_max) {
        t += dt;
        rk.advance_to(t);
        const State& s = rk.y();
        const double d = (Vec2(s[0], s[1]) - xp.pos).norm();
        const double lx = std::log(Vec2(s[2], s[3]).norm());
        if (d < 0.999 * rb) inside = true;
        if (inside && d >= rb) {
          const double f = (rb - d_prev) / (d - d_prev);
          row.amplification = std::exp(lx_prev + f * (lx - lx_prev));
          row.encountered = true;
          break;
        }
        d_prev = d;
        lx_prev = lx;
      }
    } catch (const Error&) {
      row.encountered = false;
    }
    if (!row.encountered) ++res.dropped;
    res.rows.push_back(row);
  }

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& r : res.rows) {
    if (!r.encountered) continue;
    const double x = std::log(res.V0 * r.delta), yv = std::log(r.amplification);
    sx += x;
    sy += yv;
    sxx += x * x;
    sxy += x * yv;
    ++n;
  }
  if (n < 2) throw ExperimentError("fewer than two trajectories crossed the X-point region");
  res.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  res.intercept = (sy - res.slope * sx) / n;
  return res;
}

}  // namespace bohm
