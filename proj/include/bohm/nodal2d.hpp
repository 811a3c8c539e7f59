#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bohm/wavefield.hpp"

namespace bohm {

struct Region {
  double xmin = -5.0, xmax = 5.0, ymin = -5.0, ymax = 5.0;
};

struct NodalPoint {
  double t = 0.0;
  Vec2 pos = Vec2::Zero();
  Vec2 vel = Vec2::Zero();
  bool degenerate = false;
};

// Taylor coefficients of the wavefunction around a nodal point, taken in the
// frame that moves with the node:
//   psi'(u,v) = psi(node + u e_u + v e_v) exp(-i boost.(u,v) / kappa)
//             = (a10+i b10) u + (a01+i b01) v + (a20+i b20) u^2/2
//               + (a02+i b02) v^2/2 + (a11+i b11) u v + ...
// The boost phase is what makes a02 = -a20, b02 = -b20 exact for a moving
// node. frame_field undoes it, so the flow is the ordinary lab-frame one.
struct LocalExpansion {
  double t = 0.0;
  Vec2 origin = Vec2::Zero();
  Mat2 frame = Mat2::Identity();  // columns e_u, e_v in lab coordinates
  Vec2 boost = Vec2::Zero();      // node velocity in (u, v) components
  double kappa = 1.0;             // hbar / m
  double a10 = 0, a01 = 0, a20 = 0, a02 = 0, a11 = 0;
  double b10 = 0, b01 = 0, b20 = 0, b02 = 0, b11 = 0;
  double continuity_residual = 0.0;

  Eigen::Vector2cd gradient() const;
  Eigen::Matrix2cd hessian() const;  // co-moving
  Eigen::Matrix2cd lab_hessian() const;
  // In-frame point to lab coordinates and back.
  Vec2 to_lab(const Vec2& uv) const;
  Vec2 to_frame(const Vec2& lab) const;
};

struct XPoint {
  Vec2 pos = Vec2::Zero();  // (u_X, v_X)
  double R = 0.0;
  double lambda1 = 0.0;  // positive
  double lambda2 = 0.0;  // negative
  Vec2 e_unstable = Vec2::Zero();
  Vec2 e_stable = Vec2::Zero();
  double residual = 0.0;
};

struct XPointResult {
  std::vector<XPoint> saddles;  // sorted by R
  int roots_found = 0;
  bool found() const { return !saddles.empty(); }
  bool multiple() const { return saddles.size() > 1; }
};

struct F3Record {
  double t = 0.0;
  double f3 = 0.0;
  double quadrature_error = 0.0;
};

struct HopfEvent {
  enum class Kind { attractor_to_repellor, repellor_to_attractor };
  double t;
  Kind kind;
};

// Coefficients of G dR/dt = c2 R^2 + c3 R^3 + c4 R^4 and
// G dphi/dt = d0 + d1 R + d2 R^2 + d3 R^3 for the quadratic frame flow.
struct PolarCoefficients {
  double c2, c3, c4;
  double d0, d1, d2, d3;
};

// --- nodal points -----------------------------------------------------------

std::vector<NodalPoint> find_nodal_points(const Wavefunction& wf, double t, const Region& region,
                                          int grid_n);
std::optional<NodalPoint> refine_nodal_point(const Wavefunction& wf, double t, const Vec2& guess,
                                             int max_iter = 50);
// -J^{-1} d/dt (Re psi, Im psi) at a simple zero.
Vec2 nodal_velocity(const Wavefunction& wf, const Vec2& pos, double t);

// --- local structure --------------------------------------------------------

// Raises ConsistencyError when the continuity relation fails beyond 1e-6.
LocalExpansion local_expansion(const Wavefunction& wf, const NodalPoint& node, double angle = 0.0);

// Expansion from first and second derivatives of psi at a zero, expressed in
// the given orthonormal frame. Used for plane sections in 3D, where the
// continuity check is skipped.
LocalExpansion expansion_from_derivatives(double t, const Vec2& origin, const Mat2& frame,
                                          const Eigen::Vector2cd& grad,
                                          const Eigen::Matrix2cd& hess, const Vec2& boost,
                                          double kappa);

// Quadratic lab-frame model psi_2(u, v).
complex model_value(const LocalExpansion& exp, double u, double v);
double frame_G(const LocalExpansion& exp, double u, double v);

Vec2 frame_field(const LocalExpansion& exp, const Vec2& vel, double u, double v);
Mat2 frame_field_jacobian(const LocalExpansion& exp, const Vec2& vel, double u, double v);

PolarCoefficients polar_coefficients(const LocalExpansion& exp, const Vec2& vel, double phi);

XPointResult find_x_point(const LocalExpansion& exp, const Vec2& vel);

// rho is the outer fit radius; the fit uses rho, rho/2, rho/4, rho/8.
F3Record f3_average(const LocalExpansion& exp, const Vec2& vel, double rho = 1e-4);

// Radius after one revolution of the frozen flow started at (R0, phi0).
// time_direction = -1 follows the flow backward.
double return_map(const LocalExpansion& exp, const Vec2& vel, double R0, double phi0 = 0.0,
                  int time_direction = 1);

// +1 outward, -1 inward over one revolution at radius R0.
int spiral_direction(const LocalExpansion& exp, const Vec2& vel, double R0 = 1e-3);

// Zero crossings of <f3>(t). Without f3_of_t the crossing is refined on a
// local cubic interpolant; with it, by bisection on the function itself.
std::vector<HopfEvent> detect_hopf_events(const std::vector<F3Record>& series,
                                          const std::function<double(double)>& f3_of_t = {});

// One nodal point followed by continuation in t. A new segment starts
// wherever refinement fails or the node jumps, e.g. when it escapes to
// infinity. Samples without a defined <f3> are left out of f3.
struct NodeTrack {
  std::vector<NodalPoint> nodes;
  std::vector<F3Record> f3;
};

std::vector<NodeTrack> track_node(const Wavefunction& wf, const Vec2& guess, double t0, double t1,
                                  double dt);

struct HopfCheck {
  HopfEvent event;
  int before = 0;  // spiral_direction at event.t - offset
  int after = 0;   // and at event.t + offset
  bool flipped = false;
};

// Zero crossings of <f3> along the track, refined on the true f3(t), each
// checked for an inward/outward flip of the frozen flow at radius R0.
// Sign changes through a pole of <f3> are not zero crossings and are dropped.
std::vector<HopfCheck> hopf_checks(const Wavefunction& wf, const NodeTrack& track,
                                   double offset = 0.02, double R0 = 1e-3);

// --- manifolds ----------------------------------------------------------------

// singular: the branch ran into another zero of the quadratic model, where
// the truncated flow itself breaks down.
enum class BranchEnd { arc_length, node, limit_cycle, left_box, singular };

struct ManifoldBranch {
  std::string label;
  std::vector<Vec2> points;  // frame coordinates, starting at the X-point
  BranchEnd end = BranchEnd::arc_length;
  bool spiral = false;
  double end_distance = 0.0;  // distance to the node at the last point
  double cycle_radius = 0.0;  // return-map fixed point for limit-cycle ends
  std::vector<double> loop_radii;
};

struct ManifoldOptions {
  double offset = 1e-7;
  double box_half_width = 0.0;  // 0: 20 R_X
  double rel_tol = 1e-10;
  int loops_needed = 3;
  double loop_tol = 1e-4;
};

struct ManifoldSet {
  std::array<ManifoldBranch, 4> branches;  // U, UU, S, SS
};

ManifoldSet trace_manifolds(const XPoint& xp, const LocalExpansion& exp, const Vec2& vel,
                            double arc_length, const ManifoldOptions& options = {});

const char* to_string(BranchEnd end);

// --- scattering ---------------------------------------------------------------

struct ScatteringRow {
  double delta = 0.0;
  double amplification = 0.0;  // xi / xi0 across the encounter
  bool encountered = false;
};

struct ScatteringResult {
  double slope = 0.0;
  double intercept = 0.0;
  double V0 = 0.0;
  double ball_radius = 0.0;
  int dropped = 0;
  std::vector<ScatteringRow> rows;
};

// Frozen frame flow at the node's instant. Trajectories start on the ball of
// radius ball_radius around the X-point, offset by delta from the stable
// manifold; ball_radius = 0 picks 0.3 R_X.
ScatteringResult scattering_amplification(const Wavefunction& wf, const NodalPoint& node,
                                          const std::vector<double>& deltas,
                                          double ball_radius = 0.0);

}  // namespace bohm
