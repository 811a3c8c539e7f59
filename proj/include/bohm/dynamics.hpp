#pragma once

#include <vector>

#include "bohm/wavefield.hpp"

namespace bohm {

struct IntegratorSettings {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.0;  // 0 means unlimited
  double node_guard_radius = 1e-6;
  double renorm_interval = 1.0;
  double sample_interval = 0.0;  // 0 means renorm_interval
  double min_step = 1e-14;
  long max_steps = 200'000'000;

  void validate() const;
};

struct TrajectorySample {
  double t = 0.0;
  Vec q;
  double log_stretch = 0.0;  // accumulated ln(xi / xi0)
  double step = 0.0;
};

struct StretchSample {
  double t;
  double s;  // ln(|xi(t_i)| / |xi(t_{i-1})|)
};

struct DeviationRun {
  double t0 = 0.0;
  std::vector<TrajectorySample> samples;
  std::vector<StretchSample> stretching;
};

struct LyapunovSample {
  double t;
  double chi;
};

// Samples at the sample cadence plus both end points. t1 < t0 integrates
// backward in time.
std::vector<TrajectorySample> integrate(const Wavefunction& wf, const Vec& q0, double t0,
                                        double t1, const IntegratorSettings& settings = {});

// Positions at each of the given times, which must be monotone away from t0.
std::vector<Vec> integrate_to(const Wavefunction& wf, const Vec& q0, double t0,
                              const std::vector<double>& times,
                              const IntegratorSettings& settings = {});

// Co-integrates the variational equation d xi/dt = J xi and renormalizes xi
// every renorm_interval.
DeviationRun integrate_with_deviation(const Wavefunction& wf, const Vec& q0, const Vec& xi0,
                                      double t0, double t1,
                                      const IntegratorSettings& settings = {});

std::vector<LyapunovSample> finite_time_lyapunov(const std::vector<StretchSample>& stretching,
                                                 double t0);
std::vector<LyapunovSample> finite_time_lyapunov(const DeviationRun& run);

}  // namespace bohm
