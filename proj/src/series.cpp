#include "bohm/series.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bohm/errors.hpp"

namespace bohm {

void SeriesParams::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw InputError("c must be positive");
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(x0) || !std::isfinite(y0))
    throw InputError("series parameters must be finite");
  if (order < 0) throw InputError("truncation order must be non-negative");
}

Vec2 series_central(const SeriesParams& p, double t) {
  p.validate();
  if (p.order > 1) throw InputError("only the first-order central series is available");
  if (p.order == 0) return Vec2(p.x0, p.y0);
  const double k = p.b * std::sqrt(p.c) / (1.0 + p.c);
  const double cw = std::cos((1.0 + p.c) * t) - 1.0;
  return Vec2(p.x0 + p.a * (std::cos(t) - 1.0) + k * p.y0 * cw, p.y0 + k * p.x0 * cw);
}

void check_diagonal(const SeriesParams& p) {
  p.validate();
  if (p.b == 0.0) throw DegenerateSeriesError("diagonal series divides by b");
  if (p.x0 == 0.0 || p.y0 == 0.0) throw InputError("diagonal series needs x0, y0 away from zero");
  const double sc = std::sqrt(p.c);
  // Largest possible fourth-order terms (|cos - 1| <= 2).
  const double x4 = 2.0 / std::abs(p.b * sc * (1.0 + p.c) * std::pow(p.x0, 3) * p.y0);
  const double y4 = p.a * p.a / std::abs(p.b * p.b * p.c * p.c * std::pow(p.y0, 4)) +
                    2.0 / std::abs(p.b * sc * (1.0 + p.c) * p.x0 * std::pow(p.y0, 3));
  if (std::max(x4, y4) >= 0.1)
    throw InputError("initial condition too close to the centre for the diagonal series");
}

Vec2 series_diagonal(const SeriesParams& p, double t) {
  check_diagonal(p);
  const double a = p.a, b = p.b, c = p.c, x0 = p.x0, y0 = p.y0;
  const double sc = std::sqrt(c);
  const double cw = std::cos((1.0 + c) * t) - 1.0;
  const double Y3 = a * (std::cos(c * t) - 1.0) / (b * c * sc * y0 * y0 * y0);
  const double X4 = cw / (b * sc * (1.0 + c) * x0 * x0 * x0 * y0);
  const double Y4 = -a * a * (std::cos(2.0 * c * t) - 1.0) / (2.0 * b * b * c * c * std::pow(y0, 4)) +
                    cw / (b * sc * (1.0 + c) * x0 * y0 * y0 * y0);
  return Vec2(1.0 + X4, 1.0 + Y3 + Y4);
}

Vec2 nodal_path(double a, double b, double c, double t) {
  const double s1 = std::sin(c * t);
  const double s2 = std::sin((1.0 + c) * t);
  const double eps = 1e-12;
  if (std::abs(a * s1) <= eps || std::abs(b * std::sqrt(c) * s2) <= eps)
    throw ResonanceError("nodal point at infinity (resonant denominator)", t);
  return Vec2(-s2 / (a * s1), -a * std::sin(t) / (b * std::sqrt(c) * s2));
}

OrderReport certify_ordered(const DeviationRun& trajectory, const std::vector<NodePathSample>& node,
                            double distance_threshold, double chi_threshold) {
  if (trajectory.samples.size() < 2) throw InputError("trajectory too short to certify");
  OrderReport rep;
  rep.t_end = trajectory.samples.back().t;
  const double span = std::abs(rep.t_end - trajectory.t0);
  rep.distance_threshold = distance_threshold;
  rep.chi_threshold = chi_threshold > 0.0 ? chi_threshold : 10.0 / span;
  rep.chi_end = span > 0.0 ? trajectory.samples.back().log_stretch / span : 0.0;
  rep.min_distance = std::numeric_limits<double>::infinity();
  // Trajectory position at node times by linear interpolation between samples.
  const auto& s = trajectory.samples;
  std::size_t j = 0;
  for (const auto& n : node) {
    while (j + 1 < s.size() && s[j + 1].t < n.t) ++j;
    if (j + 1 >= s.size() || n.t < s[j].t) continue;
    const double f = (n.t - s[j].t) / (s[j + 1].t - s[j].t);
    const Vec q = s[j].q + f * (s[j + 1].q - s[j].q);
    const double d = (Vec2(q[0], q[1]) - n.pos).norm();
    if (d < rep.min_distance) {
      rep.min_distance = d;
      rep.t_min_distance = n.t;
    }
  }
  rep.ordered = rep.min_distance > rep.distance_threshold && rep.chi_end < rep.chi_threshold;
  return rep;
}

OrderReport certify_ordered(const Wavefunction& eq12, const Vec2& q0, double t_end,
                            const IntegratorSettings& settings, double node_dt) {
  if (eq12.tag != ModelTag::eq12) throw InputError("closed-form node path needs the eq12 model");
  IntegratorSettings s = settings;
  s.sample_interval = 0.0;
  s.renorm_interval = std::min(settings.renorm_interval, node_dt);
  const DeviationRun run = integrate_with_deviation(eq12, Vec(q0), Vec(Vec2(1.0, 0.0)), 0.0,
                                                    t_end, s);
  std::vector<NodePathSample> node;
  for (const auto& smp : run.samples) {
    try {
      node.push_back({smp.t, nodal_path(eq12.a, eq12.b, eq12.c, smp.t)});
    } catch (const ResonanceError&) {
    }
  }
  return certify_ordered(run, node);
}

double series_max_error(const SeriesParams& p, SeriesKind kind, double t_end,
                        const IntegratorSettings& settings, double dt) {
  p.validate();
  if (!(t_end > 0.0) || !(dt > 0.0)) throw InputError("need t_end > 0 and dt > 0");
  if (kind == SeriesKind::diagonal) check_diagonal(p);
  std::vector<double> times;
  const long n = long(std::ceil(t_end / dt - 1e-9));
  for (long k = 1; k <= n; ++k) times.push_back(std::min(t_end, k * dt));
  const Wavefunction wf = model_eq12(p.a, p.b, p.c);
  const auto path = integrate_to(wf, Vec(Vec2(p.x0, p.y0)), 0.0, times, settings);
  double worst = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const Vec2 q(path[k][0], path[k][1]);
    if (kind == SeriesKind::diagonal)
      worst = std::max(worst, std::abs(series_diagonal(p, times[k]).x() - q.x() / p.x0));
    else
      worst = std::max(worst, (series_central(p, times[k]) - q).norm());
  }
  return worst;
}

ScalingReport series_scaling(const SeriesParams& p, SeriesKind kind, double t_end,
                             const IntegratorSettings& settings) {
  ScalingReport r;
  r.base = p;
  r.scaled = p;
  if (kind == SeriesKind::diagonal) {
    r.scaled.x0 *= 2.0;
    r.scaled.y0 *= 2.0;
    r.expected_low = 16.0;
    r.expected_high = 64.0;
  } else {
    r.scaled.a *= 0.5;
    r.scaled.b *= 0.5;
    r.expected_low = 3.0;
    r.expected_high = 5.3;
  }
  r.error_base = series_max_error(r.base, kind, t_end, settings);
  r.error_scaled = series_max_error(r.scaled, kind, t_end, settings);
  r.factor = r.error_scaled > 0.0 ? r.error_base / r.error_scaled
                                  : std::numeric_limits<double>::infinity();
  r.pass = r.factor >= r.expected_low && r.factor <= r.expected_high;
  return r;
}

}  // namespace bohm
