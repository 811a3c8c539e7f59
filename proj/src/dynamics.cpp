#include "bohm/dynamics.hpp"

#include <cmath>
#include <limits>

#include "bohm/errors.hpp"
#include "bohm/rk45.hpp"

namespace bohm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Bohmian flow, optionally with the tangent dynamics appended to the state.
class BohmSystem {
 public:
  BohmSystem(const Wavefunction& wf, const IntegratorSettings& s, bool deviation)
      : wf_(wf), settings_(s), d_(wf.spec.dim), deviation_(deviation),
        bound_(density_bound(wf)) {}

  void rhs(double t, const State& y, State& dy) {
    q_ = y.head(d_);
    const FlowSample f = flow(wf_, q_, t, deviation_);
    dy.resize(y.size());
    dy.head(d_) = f.v;
    if (deviation_) dy.tail(d_) = f.jac * y.tail(d_);
    cache_t_ = t;
    cache_q_ = q_;
    cache_cap_ = guard(f);
  }

  double step_cap(double t, const State& y, const State&) {
    q_ = y.head(d_);
    if (t == cache_t_ && q_ == cache_q_) return cache_cap_;
    const FlowSample f = flow(wf_, q_, t, false);
    return guard(f);
  }

  Vec position(const State& y) const { return y.head(d_); }

 private:
  // Near a node the field varies on the scale of the distance to it; keep
  // the displacement per step below a tenth of that distance.
  double guard(const FlowSample& f) const {
    const double dist = f.node_distance;
    bool near = dist < settings_.node_guard_radius;
    if (!near) {
      const double f2 = f.abs_reduced * f.abs_reduced;
      const double x2 = f.xi2;
      // exp(20) * 1e-12 < 5e-4: most points are cleared without the exponential
      if (!(x2 < 20.0 && f2 > 5e-4 * bound_)) near = f2 * std::exp(-x2) < 1e-12 * bound_;
    }
    if (!near) return kInf;
    const double speed = f.v.norm();
    return speed > 0.0 ? dist / (10.0 * speed) : kInf;
  }

  const Wavefunction& wf_;
  const IntegratorSettings& settings_;
  int d_;
  bool deviation_;
  double bound_;
  Vec q_;
  double cache_t_ = std::numeric_limits<double>::quiet_NaN();
  Vec cache_q_;
  double cache_cap_ = kInf;
};

RkOptions options_from(const IntegratorSettings& s) {
  RkOptions o;
  o.rel_tol = s.rel_tol;
  o.abs_tol = s.abs_tol;
  o.max_step = s.max_step > 0.0 ? s.max_step : kInf;
  o.min_step = s.min_step;
  o.max_steps = s.max_steps;
  return o;
}

void check_start(const Wavefunction& wf, const Vec& q0, double t0, double t1) {
  if (q0.size() != wf.spec.dim) throw InputError("initial position has the wrong dimension");
  if (!std::isfinite(t0) || !std::isfinite(t1)) throw InputError("time span must be finite");
  velocity(wf, q0, t0);
}

// Grid t0 + k*dt (in the direction of t1) followed by t1 itself.
std::vector<double> cadence(double t0, double t1, double dt) {
  std::vector<double> out;
  const double dir = t1 >= t0 ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);
  const long n = static_cast<long>(std::floor(span / dt * (1.0 + 1e-12)));
  for (long k = 1; k <= n; ++k) {
    const double t = t0 + dir * dt * double(k);
    if (std::abs(t - t1) > 1e-12 * std::max(1.0, std::abs(t1))) out.push_back(t);
  }
  if (t1 != t0) out.push_back(t1);
  return out;
}

}  // namespace

void IntegratorSettings::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw InputError("tolerances must be positive");
  if (!(node_guard_radius > 0.0)) throw InputError("node_guard_radius must be positive");
  if (!(renorm_interval > 0.0)) throw InputError("renorm_interval must be positive");
  if (sample_interval < 0.0 || max_step < 0.0) throw InputError("intervals must be non-negative");
  if (!(min_step > 0.0)) throw InputError("min_step must be positive");
}

std::vector<TrajectorySample> integrate(const Wavefunction& wf, const Vec& q0, double t0,
                                        double t1, const IntegratorSettings& settings) {
  settings.validate();
  check_start(wf, q0, t0, t1);
  BohmSystem sys(wf, settings, false);
  DormandPrince<BohmSystem> rk(sys, t0, State(q0), options_from(settings));
  std::vector<TrajectorySample> out;
  out.push_back({t0, q0, 0.0, 0.0});
  const double dt = settings.sample_interval > 0.0 ? settings.sample_interval
                                                   : settings.renorm_interval;
  for (double t : cadence(t0, t1, dt)) {
    rk.advance_to(t);
    out.push_back({t, rk.y(), 0.0, std::abs(rk.last_step())});
  }
  return out;
}

std::vector<Vec> integrate_to(const Wavefunction& wf, const Vec& q0, double t0,
                              const std::vector<double>& times,
                              const IntegratorSettings& settings) {
  settings.validate();
  if (times.empty()) return {};
  check_start(wf, q0, t0, times.back());
  BohmSystem sys(wf, settings, false);
  DormandPrince<BohmSystem> rk(sys, t0, State(q0), options_from(settings));
  std::vector<Vec> out;
  out.reserve(times.size());
  for (double t : times) {
    rk.advance_to(t);
    out.push_back(rk.y());
  }
  return out;
}

DeviationRun integrate_with_deviation(const Wavefunction& wf, const Vec& q0, const Vec& xi0,
                                      double t0, double t1, const IntegratorSettings& settings) {
  settings.validate();
  check_start(wf, q0, t0, t1);
  const int d = wf.spec.dim;
  if (xi0.size() != d) throw InputError("deviation vector has the wrong dimension");
  const double n0 = xi0.norm();
  if (!(n0 > 0.0) || !std::isfinite(n0)) throw InputError("deviation vector must be nonzero");

  BohmSystem sys(wf, settings, true);
  State y(2 * d);
  y.head(d) = q0;
  y.tail(d) = xi0 / n0;
  DormandPrince<BohmSystem> rk(sys, t0, y, options_from(settings));

  DeviationRun run;
  run.t0 = t0;
  run.samples.push_back({t0, q0, 0.0, 0.0});
  double acc = 0.0;
  for (double t : cadence(t0, t1, settings.renorm_interval)) {
    rk.advance_to(t);
    State s = rk.y();
    const double n = s.tail(d).norm();
    const double stretch = std::log(n);
    acc += stretch;
    run.stretching.push_back({t, stretch});
    run.samples.push_back({t, s.head(d), acc, std::abs(rk.last_step())});
    s.tail(d) /= n;
    rk.reset_state(s);
  }
  return run;
}

std::vector<LyapunovSample> finite_time_lyapunov(const std::vector<StretchSample>& stretching,
                                                 double t0) {
  if (stretching.empty()) throw InputError("empty stretching series");
  std::vector<LyapunovSample> out;
  out.reserve(stretching.size());
  double acc = 0.0;
  for (const auto& s : stretching) {
    acc += s.s;
    const double span = std::abs(s.t - t0);
    out.push_back({s.t, span > 0.0 ? acc / span : 0.0});
  }
  return out;
}

std::vector<LyapunovSample> finite_time_lyapunov(const DeviationRun& run) {
  return finite_time_lyapunov(run.stretching, run.t0);
}

}  // namespace bohm
