#include "bohm/nodal2d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bohm/errors.hpp"
#include "bohm/rk45.hpp"

namespace bohm {

namespace {

constexpr complex kI{0.0, 1.0};

struct Local2 {
  complex F;
  Eigen::Vector2cd g;
  complex Ft;
};

Local2 reduced2(const Wavefunction& wf, const Vec2& p, double t) {
  const FieldSample s = eval_reduced(wf, Vec(p), t);
  return {s.psi, Eigen::Vector2cd(s.grad[0], s.grad[1]), s.dpsi_dt};
}

Mat2 real_jacobian(const Eigen::Vector2cd& g) {
  Mat2 J;
  J << g[0].real(), g[1].real(), g[0].imag(), g[1].imag();
  return J;
}

Mat2 rotation(double angle) {
  Mat2 R;
  R << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return R;
}

void require_2d(const Wavefunction& wf) {
  if (wf.spec.dim != 2) throw InputError("nodal point analysis needs a 2D model");
  if (wf.spec.mass[0] != wf.spec.mass[1])
    throw InputError("nodal point analysis assumes equal masses");
}

double gradient_scale(const LocalExpansion& e) {
  return e.a10 * e.a10 + e.b10 * e.b10 + e.a01 * e.a01 + e.b01 * e.b01;
}

struct Quadratic {
  complex psi;
  Eigen::Vector2cd grad;
};

Quadratic quadratic(const LocalExpansion& e, double u, double v) {
  const Eigen::Vector2cd g = e.gradient();
  const Eigen::Matrix2cd H = e.lab_hessian();
  const Eigen::Vector2cd p(u, v);
  Quadratic q;
  q.grad = g + H * p;
  q.psi = g[0] * u + g[1] * v + 0.5 * (H(0, 0) * u * u + 2.0 * H(0, 1) * u * v + H(1, 1) * v * v);
  return q;
}

}  // namespace

// --- expansion accessors ------------------------------------------------------

Eigen::Vector2cd LocalExpansion::gradient() const {
  return {complex(a10, b10), complex(a01, b01)};
}

Eigen::Matrix2cd LocalExpansion::hessian() const {
  Eigen::Matrix2cd H;
  H << complex(a20, b20), complex(a11, b11), complex(a11, b11), complex(a02, b02);
  return H;
}

Eigen::Matrix2cd LocalExpansion::lab_hessian() const {
  const Eigen::Vector2cd g = gradient();
  const Eigen::Vector2cd V = boost.cast<complex>();
  return hessian() + (kI / kappa) * (V * g.transpose() + g * V.transpose());
}

Vec2 LocalExpansion::to_lab(const Vec2& uv) const { return origin + frame * uv; }
Vec2 LocalExpansion::to_frame(const Vec2& lab) const { return frame.transpose() * (lab - origin); }

// --- nodal points -------------------------------------------------------------

Vec2 nodal_velocity(const Wavefunction& wf, const Vec2& pos, double t) {
  const Local2 s = reduced2(wf, pos, t);
  const Mat2 J = real_jacobian(s.g);
  const double det = J.determinant();
  if (std::abs(det) <= 1e-14 * s.g.squaredNorm())
    throw SingularFrameError("nodal point is not simple; velocity undefined");
  return -J.inverse() * Vec2(s.Ft.real(), s.Ft.imag());
}

std::optional<NodalPoint> refine_nodal_point(const Wavefunction& wf, double t, const Vec2& guess,
                                             int max_iter) {
  require_2d(wf);
  Vec2 p = guess;
  for (int it = 0; it < max_iter; ++it) {
    const Local2 s = reduced2(wf, p, t);
    const Mat2 J = real_jacobian(s.g);
    const double det = J.determinant();
    if (!std::isfinite(det) || det == 0.0) return std::nullopt;
    Vec2 step = -J.inverse() * Vec2(s.F.real(), s.F.imag());
    const double sn = step.norm();
    if (!std::isfinite(sn)) return std::nullopt;
    if (sn > 1.0) step *= 1.0 / sn;
    p += step;
    if (sn <= 1e-15 * (1.0 + p.norm())) {
      NodalPoint node;
      node.t = t;
      node.pos = p;
      const Local2 f = reduced2(wf, p, t);
      const Mat2 Jf = real_jacobian(f.g);
      node.degenerate = std::abs(Jf.determinant()) <= 1e-10 * f.g.squaredNorm();
      node.vel = node.degenerate ? Vec2::Zero()
                                 : Vec2(-Jf.inverse() * Vec2(f.Ft.real(), f.Ft.imag()));
      return node;
    }
  }
  return std::nullopt;
}

std::vector<NodalPoint> find_nodal_points(const Wavefunction& wf, double t, const Region& region,
                                          int grid_n) {
  require_2d(wf);
  if (grid_n < 8) throw InputError("grid_n must be at least 8");
  if (!(region.xmax > region.xmin) || !(region.ymax > region.ymin) ||
      !std::isfinite(region.xmax - region.xmin) || !std::isfinite(region.ymax - region.ymin))
    throw InputError("region must be a finite, non-empty rectangle");
  const double hx = (region.xmax - region.xmin) / grid_n;
  const double hy = (region.ymax - region.ymin) / grid_n;
  std::vector<complex> F((grid_n + 1) * (grid_n + 1));
  for (int i = 0; i <= grid_n; ++i)
    for (int j = 0; j <= grid_n; ++j)
      F[i * (grid_n + 1) + j] =
          reduced2(wf, Vec2(region.xmin + i * hx, region.ymin + j * hy), t).F;

  std::vector<NodalPoint> out;
  for (int i = 0; i < grid_n; ++i) {
    for (int j = 0; j < grid_n; ++j) {
      double re_lo = 1e300, re_hi = -1e300, im_lo = 1e300, im_hi = -1e300;
      for (int di = 0; di <= 1; ++di)
        for (int dj = 0; dj <= 1; ++dj) {
          const complex z = F[(i + di) * (grid_n + 1) + j + dj];
          re_lo = std::min(re_lo, z.real());
          re_hi = std::max(re_hi, z.real());
          im_lo = std::min(im_lo, z.imag());
          im_hi = std::max(im_hi, z.imag());
        }
      if (!(re_lo <= 0.0 && re_hi >= 0.0 && im_lo <= 0.0 && im_hi >= 0.0)) continue;
      const Vec2 seed(region.xmin + (i + 0.5) * hx, region.ymin + (j + 0.5) * hy);
      const auto node = refine_nodal_point(wf, t, seed);
      if (!node) continue;
      const Vec2& p = node->pos;
      if (p.x() < region.xmin - hx || p.x() > region.xmax + hx || p.y() < region.ymin - hy ||
          p.y() > region.ymax + hy)
        continue;
      const bool dup = std::any_of(out.begin(), out.end(), [&](const NodalPoint& q) {
        return (q.pos - p).norm() < 1e-8;
      });
      if (!dup) out.push_back(*node);
    }
  }
  std::sort(out.begin(), out.end(), [](const NodalPoint& a, const NodalPoint& b) {
    return a.pos.x() < b.pos.x() || (a.pos.x() == b.pos.x() && a.pos.y() < b.pos.y());
  });
  return out;
}

// --- local expansion ----------------------------------------------------------

LocalExpansion expansion_from_derivatives(double t, const Vec2& origin, const Mat2& frame,
                                          const Eigen::Vector2cd& grad,
                                          const Eigen::Matrix2cd& hess, const Vec2& boost,
                                          double kappa) {
  const Eigen::Matrix2cd R = frame.cast<complex>();
  const Eigen::Vector2cd g = R.transpose() * grad;
  const Vec2 V = frame.transpose() * boost;
  const Eigen::Vector2cd Vc = V.cast<complex>();
  const Eigen::Matrix2cd H = R.transpose() * hess * R - (kI / kappa) * (Vc * g.transpose() +
                                                                       g * Vc.transpose());
  LocalExpansion e;
  e.t = t;
  e.origin = origin;
  e.frame = frame;
  e.boost = V;
  e.kappa = kappa;
  e.a10 = g[0].real();
  e.b10 = g[0].imag();
  e.a01 = g[1].real();
  e.b01 = g[1].imag();
  e.a20 = H(0, 0).real();
  e.b20 = H(0, 0).imag();
  e.a02 = H(1, 1).real();
  e.b02 = H(1, 1).imag();
  e.a11 = 0.5 * (H(0, 1) + H(1, 0)).real();
  e.b11 = 0.5 * (H(0, 1) + H(1, 0)).imag();
  const double scale =
      hess.norm() + g.norm() * V.norm() / kappa + std::numeric_limits<double>::min();
  e.continuity_residual = std::abs(H(0, 0) + H(1, 1)) / scale;
  return e;
}

LocalExpansion local_expansion(const Wavefunction& wf, const NodalPoint& node, double angle) {
  require_2d(wf);
  const FieldSample s = eval(wf, Vec(node.pos), node.t);
  const Eigen::Vector2cd grad(s.grad[0], s.grad[1]);
  if (grad.real().isZero(0.0) && grad.imag().isZero(0.0))
    throw InputError("all first-order coefficients vanish at the nodal point");
  Eigen::Matrix2cd hess;
  hess << s.hess(0, 0), s.hess(0, 1), s.hess(1, 0), s.hess(1, 1);
  LocalExpansion e = expansion_from_derivatives(node.t, node.pos, rotation(angle), grad, hess,
                                                node.vel, wf.spec.hbar / wf.spec.mass[0]);
  if (e.continuity_residual > 1e-6)
    throw ConsistencyError("continuity relation violated at the nodal point (residual " +
                           std::to_string(e.continuity_residual) + ")");
  return e;
}

// --- frame flow ---------------------------------------------------------------

complex model_value(const LocalExpansion& exp, double u, double v) {
  return quadratic(exp, u, v).psi;
}

double frame_G(const LocalExpansion& exp, double u, double v) {
  return std::norm(model_value(exp, u, v));
}

Vec2 frame_field(const LocalExpansion& exp, const Vec2& vel, double u, double v) {
  const Quadratic q = quadratic(exp, u, v);
  const double G = std::norm(q.psi);
  if (G <= 1e-30 * gradient_scale(exp)) throw SingularFrameError("G vanishes in the frame flow");
  const complex c = std::conj(q.psi);
  return Vec2(exp.kappa * (q.grad[0] * c).imag() / G - vel.x(),
              exp.kappa * (q.grad[1] * c).imag() / G - vel.y());
}

Mat2 frame_field_jacobian(const LocalExpansion& exp, const Vec2& vel, double u, double v) {
  (void)vel;
  const Quadratic q = quadratic(exp, u, v);
  const double G = std::norm(q.psi);
  if (G <= 1e-30 * gradient_scale(exp)) throw SingularFrameError("G vanishes in the frame flow");
  const Eigen::Matrix2cd H = exp.lab_hessian();
  const complex inv = 1.0 / q.psi;
  Mat2 J;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      J(i, j) = exp.kappa * (H(i, j) * inv - q.grad[i] * q.grad[j] * inv * inv).imag();
  return J;
}

PolarCoefficients polar_coefficients(const LocalExpansion& exp, const Vec2& vel, double phi) {
  const Eigen::Vector2cd g = exp.gradient();
  const Eigen::Matrix2cd H = exp.lab_hessian();
  const Vec2 e(std::cos(phi), std::sin(phi));
  const Vec2 n(-std::sin(phi), std::cos(phi));
  const complex alpha = g[0] * e.x() + g[1] * e.y();
  const Eigen::Vector2cd h = H * e.cast<complex>();
  const complex beta = 0.5 * (h[0] * e.x() + h[1] * e.y());
  const complex hn = h[0] * n.x() + h[1] * n.y();
  const complex gn = g[0] * n.x() + g[1] * n.y();
  const double k = exp.kappa;
  const double aa = std::norm(alpha);
  const double ab = (std::conj(alpha) * beta).real();
  const double bb = std::norm(beta);
  const double Ve = vel.dot(e), Vn = vel.dot(n);
  PolarCoefficients c;
  // The R^1 radial term is k Im(conj(alpha) alpha) = 0 identically.
  c.c2 = k * (std::conj(alpha) * beta).imag() - aa * Ve;
  c.c3 = -2.0 * ab * Ve;
  c.c4 = -bb * Ve;
  c.d0 = k * (std::conj(alpha) * gn).imag();
  c.d1 = k * (std::conj(alpha) * hn + std::conj(beta) * gn).imag() - aa * Vn;
  c.d2 = k * (std::conj(beta) * hn).imag() - 2.0 * ab * Vn;
  c.d3 = -bb * Vn;
  return c;
}

namespace {

// G dR/dt and G dphi/dt of the quadratic frame flow at polar point (R, phi),
// built from the exactly cancelling structure of the model instead of from
// the singular ratio, so that they keep full relative precision at small R.
struct PolarParts {
  double PR, Pphi;
};

PolarParts polar_parts(const PolarCoefficients& c, double R) {
  return {R * R * (c.c2 + R * (c.c3 + R * c.c4)), c.d0 + R * (c.d1 + R * (c.d2 + R * c.d3))};
}

// Solves the 4x4 Vandermonde system sum_k coef_k r_i^k = y_i, in units of
// the largest radius to keep it well conditioned.
Eigen::Vector4d vandermonde_fit(const std::array<double, 4>& r, const std::array<double, 4>& y) {
  Eigen::Matrix4d M;
  Eigen::Vector4d b;
  for (int i = 0; i < 4; ++i) {
    for (int k = 0; k < 4; ++k) M(i, k) = std::pow(r[i] / r[0], k);
    b[i] = y[i];
  }
  Eigen::Vector4d c = M.fullPivLu().solve(b);
  for (int k = 1; k < 4; ++k) c[k] /= std::pow(r[0], k);
  return c;
}

// Mean of (c3/d0 - c2 d1/d0^2) over the circle, extracted from fits at radii
// rho/{1,2,4,8}.
double f3_integrand(const LocalExpansion& exp, const Vec2& vel, double phi, double rho) {
  const PolarCoefficients c = polar_coefficients(exp, vel, phi);
  std::array<double, 4> r{}, yR{}, yP{};
  for (int i = 0; i < 4; ++i) {
    r[i] = rho / double(1 << i);
    const PolarParts p = polar_parts(c, r[i]);
    yR[i] = p.PR / (r[i] * r[i]);
    yP[i] = p.Pphi;
  }
  const Eigen::Vector4d fr = vandermonde_fit(r, yR);  // c2, c3, c4, 0
  const Eigen::Vector4d fp = vandermonde_fit(r, yP);  // d0, d1, d2, d3
  const double d0 = fp[0];
  return fr[1] / d0 - fr[0] * fp[1] / (d0 * d0);
}

struct Quadrature {
  double value, error;
};

Quadrature periodic_mean(const std::function<double(double)>& f) {
  int n = 16;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += f(2.0 * kPi * i / n);
  double prev = sum / n;
  while (n < (1 << 15)) {
    double extra = 0.0;
    for (int i = 0; i < n; ++i) extra += f(2.0 * kPi * (i + 0.5) / n);
    sum += extra;
    n *= 2;
    const double cur = sum / n;
    const double err = std::abs(cur - prev);
    if (err <= 1e-8 * std::max(1.0, std::abs(cur))) return {cur, err};
    prev = cur;
  }
  return {prev, std::numeric_limits<double>::infinity()};
}

}  // namespace

F3Record f3_average(const LocalExpansion& exp, const Vec2& vel, double rho) {
  if (!(rho > 0.0)) throw InputError("fit radius must be positive");
  const double d0 = exp.kappa * (exp.a10 * exp.b01 - exp.a01 * exp.b10);
  if (std::abs(d0) <= 1e-12 * exp.kappa * gradient_scale(exp))
    throw UndefinedAverageError("d0 vanishes: the flow near the node is not rotation-dominated");
  const auto mean_at = [&](double r) {
    return periodic_mean([&](double phi) { return f3_integrand(exp, vel, phi, r); });
  };
  const Quadrature q1 = mean_at(rho);
  const Quadrature q2 = mean_at(0.5 * rho);
  // The fit is exact through R^3, so the residual truncation is O(rho^4).
  const double extrapolated = (16.0 * q2.value - q1.value) / 15.0;
  F3Record rec;
  rec.t = exp.t;
  rec.f3 = (d0 > 0.0 ? 1.0 : -1.0) * extrapolated;
  rec.quadrature_error = std::abs(extrapolated - q2.value) + std::max(q1.error, q2.error);
  return rec;
}

double return_map(const LocalExpansion& exp, const Vec2& vel, double R0, double phi0,
                  int time_direction) {
  const double d0 = exp.a10 * exp.b01 - exp.a01 * exp.b10;
  if (d0 == 0.0) throw UndefinedAverageError("no rotation around the node");
  const double sweep = 2.0 * kPi * (d0 > 0.0 ? 1.0 : -1.0) * (time_direction >= 0 ? 1.0 : -1.0);
  auto sys = make_system([&](double phi, const State& y) {
    const PolarCoefficients c = polar_coefficients(exp, vel, phi);
    const PolarParts p = polar_parts(c, y[0]);
    if (p.Pphi * d0 <= 0.0) throw UndefinedAverageError("angular motion reverses on the orbit");
    State dy(1);
    dy[0] = p.PR / p.Pphi;
    return dy;
  });
  RkOptions opt;
  opt.rel_tol = 1e-13;
  opt.abs_tol = 1e-16 * R0;
  opt.max_step = 0.1;
  opt.min_step = 1e-9;
  opt.max_steps = 20000;
  State y(1);
  y[0] = R0;
  DormandPrince<decltype(sys)> rk(sys, phi0, y, opt);
  rk.advance_to(phi0 + sweep);
  return rk.y()[0];
}

int spiral_direction(const LocalExpansion& exp, const Vec2& vel, double R0) {
  const double R1 = return_map(exp, vel, R0, 0.0, 1);
  if (R1 > R0) return 1;
  if (R1 < R0) return -1;
  return 0;
}

// --- X-point ------------------------------------------------------------------

XPointResult find_x_point(const LocalExpansion& exp, const Vec2& vel) {
  const double speed = vel.norm();
  if (!(speed > 0.0)) throw InputError("the X-point accompanies a moving node; velocity is zero");
  const double A = exp.a01 * exp.b10 - exp.a10 * exp.b01;
  const double S = 0.5 * gradient_scale(exp);
  const double r0 = std::abs(A) * exp.kappa / (speed * S);
  XPointResult out;
  std::vector<Vec2> roots;
  for (double scale : {0.5, 1.0, 2.0}) {
    for (int k = 0; k < 16; ++k) {
      const double phi = 2.0 * kPi * k / 16.0;
      Vec2 z(scale * r0 * std::cos(phi), scale * r0 * std::sin(phi));
      bool ok = false;
      try {
        Vec2 w = frame_field(exp, vel, z.x(), z.y());
        for (int it = 0; it < 80; ++it) {
          const Mat2 J = frame_field_jacobian(exp, vel, z.x(), z.y());
          const double det = J.determinant();
          if (!std::isfinite(det) || det == 0.0) break;
          const Vec2 step = -J.inverse() * w;
          double lam = 1.0;
          Vec2 zn;
          Vec2 wn;
          bool improved = false;
          for (int ls = 0; ls < 30; ++ls) {
            zn = z + lam * step;
            try {
              wn = frame_field(exp, vel, zn.x(), zn.y());
              if (wn.norm() < w.norm() || wn.norm() < 1e-13 * speed) {
                improved = true;
                break;
              }
            } catch (const SingularFrameError&) {
            }
            lam *= 0.5;
          }
          if (!improved) break;
          z = zn;
          w = wn;
          if (w.norm() <= 1e-13 * speed || lam * step.norm() <= 1e-15 * z.norm()) break;
        }
        // A stalled step is not a root unless the field is small there too.
        ok = w.norm() < 1e-10 * std::max(1.0, speed);
      } catch (const SingularFrameError&) {
        ok = false;
      }
      if (!ok || !(z.norm() > 1e-6 * r0)) continue;
      const bool dup = std::any_of(roots.begin(), roots.end(), [&](const Vec2& r) {
        return (r - z).norm() < 1e-7 * std::max(1.0, r0);
      });
      if (!dup) roots.push_back(z);
    }
  }
  out.roots_found = int(roots.size());
  for (const Vec2& z : roots) {
    const Mat2 J = frame_field_jacobian(exp, vel, z.x(), z.y());
    const double det = J.determinant();
    if (!(det < 0.0)) continue;
    const double tr = J.trace();
    const double disc = std::sqrt(0.25 * tr * tr - det);
    XPoint xp;
    xp.pos = z;
    xp.R = z.norm();
    xp.lambda1 = 0.5 * tr + disc;
    xp.lambda2 = 0.5 * tr - disc;
    const auto eigvec = [&](double lam) {
      const Vec2 c1(J(0, 1), lam - J(0, 0));
      const Vec2 c2(lam - J(1, 1), J(1, 0));
      const Vec2 v = c1.norm() >= c2.norm() ? c1 : c2;
      return Vec2(v / v.norm());
    };
    xp.e_unstable = eigvec(xp.lambda1);
    xp.e_stable = eigvec(xp.lambda2);
    xp.residual = frame_field(exp, vel, z.x(), z.y()).norm();
    out.saddles.push_back(xp);
  }
  std::sort(out.saddles.begin(), out.saddles.end(),
            [](const XPoint& a, const XPoint& b) { return a.R < b.R; });
  return out;
}

// --- Hopf events --------------------------------------------------------------

std::vector<HopfEvent> detect_hopf_events(const std::vector<F3Record>& series,
                                          const std::function<double(double)>& f3_of_t) {
  std::vector<HopfEvent> events;
  const std::size_t n = series.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double fa = series[i].f3, fb = series[i + 1].f3;
    if (!((fa < 0.0 && fb >= 0.0) || (fa > 0.0 && fb <= 0.0))) continue;
    if (fb == 0.0 && i + 2 < n && (series[i + 2].f3 > 0.0) == (fa > 0.0)) continue;
    double lo = series[i].t, hi = series[i + 1].t;
    std::function<double(double)> f = f3_of_t;
    if (!f) {
      // Cubic through the four nearest samples.
      const std::size_t s = i == 0 ? 0 : std::min(i - 1, n >= 4 ? n - 4 : 0);
      const std::size_t m = std::min<std::size_t>(4, n - s);
      f = [&series, s, m](double t) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          double w = series[s + j].f3;
          for (std::size_t k = 0; k < m; ++k)
            if (k != j) w *= (t - series[s + k].t) / (series[s + j].t - series[s + k].t);
          acc += w;
        }
        return acc;
      };
    }
    double flo = fa;
    for (int it = 0; it < 200 && hi - lo > 1e-9; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = f(mid);
      if ((fm < 0.0) == (flo < 0.0) && fm != 0.0) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    events.push_back({0.5 * (lo + hi), fa < 0.0 ? HopfEvent::Kind::attractor_to_repellor
                                                : HopfEvent::Kind::repellor_to_attractor});
  }
  return events;
}

// --- tracking -----------------------------------------------------------------

std::vector<NodeTrack> track_node(const Wavefunction& wf, const Vec2& guess, double t0, double t1,
                                  double dt) {
  require_2d(wf);
  if (!(dt > 0.0) || !(t1 > t0)) throw InputError("need t1 > t0 and dt > 0");
  std::vector<NodeTrack> tracks;
  NodeTrack cur;
  Vec2 g = guess;
  const long n = long(std::floor((t1 - t0) / dt * (1.0 + 1e-12)));
  for (long k = 0; k <= n; ++k) {
    const double t = t0 + k * dt;
    Vec2 pred = g;
    if (!cur.nodes.empty()) pred = cur.nodes.back().pos + dt * cur.nodes.back().vel;
    auto node = refine_nodal_point(wf, t, pred);
    const bool jump = node && !cur.nodes.empty() &&
                      (node->pos - pred).norm() > 0.1 * (1.0 + dt * cur.nodes.back().vel.norm());
    // Beyond this the Gaussian underflows and the node counts as escaped.
    const bool far = node && envelope(wf, Vec(node->pos)) < 1e-150;
    if (!node || jump || far || node->degenerate) {
      if (!cur.nodes.empty()) tracks.push_back(std::move(cur));
      cur = NodeTrack{};
      continue;
    }
    cur.nodes.push_back(*node);
    try {
      const LocalExpansion e = local_expansion(wf, *node);
      F3Record r = f3_average(e, e.boost);
      r.t = t;
      cur.f3.push_back(r);
    } catch (const UndefinedAverageError&) {
    }
  }
  if (!cur.nodes.empty()) tracks.push_back(std::move(cur));
  return tracks;
}

namespace {

// Node near time t, continued from the nearest track sample.
std::optional<NodalPoint> node_near(const Wavefunction& wf, const NodeTrack& track, double t) {
  const NodalPoint* best = nullptr;
  for (const auto& nd : track.nodes)
    if (!best || std::abs(nd.t - t) < std::abs(best->t - t)) best = &nd;
  if (!best) return std::nullopt;
  // Short continuation steps keep Newton in the right basin.
  NodalPoint cur = *best;
  const int steps = std::max(1, int(std::ceil(std::abs(t - cur.t) / 1e-3)));
  const double h = (t - cur.t) / steps;
  for (int k = 1; k <= steps; ++k) {
    const double tk = best->t + k * h;
    auto nd = refine_nodal_point(wf, tk, cur.pos + h * cur.vel);
    if (!nd) return std::nullopt;
    cur = *nd;
  }
  return cur;
}

}  // namespace

std::vector<HopfCheck> hopf_checks(const Wavefunction& wf, const NodeTrack& track, double offset,
                                   double R0) {
  const auto f3_at = [&](double t) {
    const auto nd = node_near(wf, track, t);
    if (!nd) throw ExperimentError("node lost while refining a Hopf event");
    const LocalExpansion e = local_expansion(wf, *nd);
    return f3_average(e, e.boost).f3;
  };
  std::vector<HopfCheck> out;
  for (const HopfEvent& ev : detect_hopf_events(track.f3, f3_at)) {
    // A zero crossing leaves |f3| small at the refined time; a pole does not.
    double scale = 0.0;
    for (const auto& r : track.f3)
      if (std::abs(r.t - ev.t) < 0.1) scale = std::max(scale, std::abs(r.f3));
    if (!(std::abs(f3_at(ev.t)) < 1e-3 * scale)) continue;
    HopfCheck c;
    c.event = ev;
    const auto spiral = [&](double t) {
      const auto nd = node_near(wf, track, t);
      if (!nd) throw ExperimentError("node lost at a Hopf side check");
      const LocalExpansion e = local_expansion(wf, *nd);
      return spiral_direction(e, e.boost, R0);
    };
    c.before = spiral(ev.t - offset);
    c.after = spiral(ev.t + offset);
    c.flipped = c.before != 0 && c.after == -c.before;
    out.push_back(c);
  }
  return out;
}

}  // namespace bohm
