#pragma once

#include <array>
#include <optional>
#include <vector>

#include "bohm/dynamics.hpp"
#include "bohm/nodal2d.hpp"

namespace bohm {

struct NodalLineSample {
  double t = 0.0;
  Vec3 point = Vec3::Zero();
  Vec3 tangent = Vec3::UnitZ();
  std::array<Vec3, 2> basis{Vec3::UnitX(), Vec3::UnitY()};  // spans the plane normal to tangent
  double residual = 0.0;  // |psi| / |grad psi| after correction
};

struct NodalLineOptions {
  double step = 1e-2;
  double min_step = 1e-6;
  int orientation = 1;  // sign applied to the seed tangent
  bool both_directions = true;
};

struct NodalLine {
  std::vector<NodalLineSample> samples;  // ordered along the line
  bool truncated = false;
  double max_jump = 0.0;  // largest corrector displacement
};

// Zero of psi closest to the guess, corrected within the plane normal to the
// local line direction. Empty when Newton fails.
std::optional<NodalLineSample> refine_line_point(const Wavefunction& wf, double t,
                                                 const Vec3& guess);

// Euler predictor along grad Re psi x grad Im psi, Newton corrector in the
// normal plane, step halving down to min_step. arc_length is per direction.
NodalLine trace_nodal_line(const Wavefunction& wf, double t, const Vec3& seed, double arc_length,
                           const NodalLineOptions& options = {});

struct XLineSample {
  NodalLineSample line;
  LocalExpansion expansion;  // (u, v) are coordinates along line.basis
  Vec2 node_velocity = Vec2::Zero();  // in-plane, same coordinates
  XPointResult xpoints;
  std::optional<double> f3;
  double w_velocity = 0.0;     // largest out-of-plane velocity on the probe circle
  double inplane_speed = 0.0;  // smallest in-plane speed, relative to the node, on that circle
};

XLineSample planar_complex(const Wavefunction& wf, const NodalLineSample& sample,
                           double probe_radius = 1e-4);

struct XLineVertex {
  bool present = false;
  Vec3 pos = Vec3::Zero();
  double R = 0.0;
};

struct XLine {
  std::vector<XLineVertex> vertices;  // one per sample; gaps where no X-point exists
  std::vector<std::vector<Vec3>> segments() const;
};

XLine assemble_x_line(const std::vector<XLineSample>& samples);

// C = c[0] x1^2 + c[1] x2^2 + c[2] x3^2 + log_coef ln|x_{log_axis}|
struct InvariantSpec {
  std::array<double, 3> c{1.0, 1.0, 0.5};
  double log_coef = -0.28867513459481287;  // -sqrt(3)/6
  int log_axis = 2;
};

double invariant_value(const InvariantSpec& spec, const Vec& q);

struct ConservationReport {
  double C0 = 0.0;
  double max_drift = 0.0;  // max |C(t) - C0| / |C0|
  double t_end = 0.0;
  int samples = 0;
};

// Integrates one trajectory and tracks C along it. sample_interval 0 uses
// the settings cadence. Raises SingularInvariantError if the log axis
// changes sign.
ConservationReport check_conservation(const Wavefunction& wf, const InvariantSpec& spec,
                                      const Vec& q0, double t0, double t1,
                                      const IntegratorSettings& settings = {},
                                      double sample_interval = 0.01);

struct ProbeReport {
  // sqrt of the smallest within-trajectory / total variance ratio over
  // combinations of x_k^2 and ln|x_k|. Zero for an exact invariant.
  double score = 0.0;
  std::vector<double> coefficients;  // best combination, same order as basis
  std::vector<std::string> basis;
  int trajectories = 0;
  int dropped = 0;
};

ProbeReport partial_integrability_probe(const Wavefunction& wf, const std::vector<Vec>& starts,
                                        double t0, double t1,
                                        const IntegratorSettings& settings = {},
                                        double sample_interval = 0.05, int threads = 0);

}  // namespace bohm
