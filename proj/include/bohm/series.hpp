#pragma once

#include <vector>

#include "bohm/dynamics.hpp"
#include "bohm/nodal2d.hpp"

namespace bohm {

struct SeriesParams {
  double a = 1.23;
  double b = 1.15;
  double c = 0.70710678118654752440;
  double x0 = 0.0;
  double y0 = 0.0;
  int order = 1;

  void validate() const;
};

// First order in the amplitudes (inner region).
Vec2 series_central(const SeriesParams& p, double t);

// Normalized (X, Y) = (x/x0, y/y0) through fourth order in 1/x0, 1/y0.
Vec2 series_diagonal(const SeriesParams& p, double t);

// Raises DegenerateSeriesError for b = 0 and InputError when the fourth
// order correction is not small (|x0|, |y0| too close to the origin).
void check_diagonal(const SeriesParams& p);

// Position of the unique nodal point of the eq12 model.
Vec2 nodal_path(double a, double b, double c, double t);

struct NodePathSample {
  double t;
  Vec2 pos;
};

struct OrderReport {
  double min_distance = 0.0;
  double t_min_distance = 0.0;
  double chi_end = 0.0;
  double t_end = 0.0;
  double distance_threshold = 0.5;
  double chi_threshold = 0.0;
  bool ordered = false;
};

// Samples must cover a common span; node samples at times where the node is
// at infinity are simply omitted by the caller.
OrderReport certify_ordered(const DeviationRun& trajectory, const std::vector<NodePathSample>& node,
                            double distance_threshold = 0.5, double chi_threshold = 0.0);

// Convenience for the eq12 model: integrates the trajectory with deviation
// and samples the closed-form node path on the same cadence.
OrderReport certify_ordered(const Wavefunction& eq12, const Vec2& q0, double t_end,
                            const IntegratorSettings& settings = {}, double node_dt = 0.01);

inline IntegratorSettings tight_settings() {
  IntegratorSettings s;
  s.rel_tol = 1e-12;
  s.abs_tol = 1e-14;
  return s;
}

enum class SeriesKind { central, diagonal };

// Largest deviation of the series from the integrated eq12 trajectory over
// [0, t_end], sampled every dt. Diagonal: max |X - x/x0| (the Y column is not
// used). Central: max Euclidean distance.
double series_max_error(const SeriesParams& p, SeriesKind kind, double t_end,
                        const IntegratorSettings& settings = tight_settings(), double dt = 0.05);

struct ScalingReport {
  SeriesParams base;
  SeriesParams scaled;  // x0, y0 doubled (diagonal) or a, b halved (central)
  double error_base = 0.0;
  double error_scaled = 0.0;
  double factor = 0.0;  // error_base / error_scaled
  double expected_low = 0.0, expected_high = 0.0;
  bool pass = false;
};

// Diagonal: expects [16, 64] (next omitted order 5). Central: [3, 5.3],
// i.e. 4 within a third of an octave.
ScalingReport series_scaling(const SeriesParams& p, SeriesKind kind, double t_end,
                             const IntegratorSettings& settings = tight_settings());

}  // namespace bohm
