#include "bohm/nodal3d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bohm/errors.hpp"
#include "bohm/parallel.hpp"

namespace bohm {

namespace {

void require_3d(const Wavefunction& wf) {
  if (wf.spec.dim != 3) throw InputError("nodal lines need a 3D wavefunction");
}

struct LocalField {
  complex F;
  Vec3 gr, gi;  // gradients of Re F and Im F
};

LocalField reduced(const Wavefunction& wf, const Vec3& p, double t) {
  const FieldSample s = eval_reduced(wf, Vec(p), t);
  LocalField f;
  f.F = s.psi;
  for (int k = 0; k < 3; ++k) {
    f.gr[k] = s.grad[k].real();
    f.gi[k] = s.grad[k].imag();
  }
  return f;
}

// Unit vector along the line, or zero where the Jacobian drops rank.
Vec3 line_direction(const LocalField& f) {
  const Vec3 c = f.gr.cross(f.gi);
  const double n = c.norm();
  if (!(n > 1e-10 * f.gr.norm() * f.gi.norm()) || !(n > 0.0)) return Vec3::Zero();
  return c / n;
}

std::array<Vec3, 2> normal_basis(const Vec3& tau) {
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(tau[i]) < std::abs(tau[k])) k = i;
  Vec3 e1 = Vec3::Unit(k) - tau[k] * tau;
  e1.normalize();
  return {e1, tau.cross(e1)};
}

// Newton on (Re F, Im F) restricted to p + span(basis).
bool correct(const Wavefunction& wf, double t, Vec3& p, const std::array<Vec3, 2>& basis,
             double& moved) {
  const Vec3 start = p;
  for (int it = 0; it < 40; ++it) {
    const LocalField f = reduced(wf, p, t);
    Mat2 J;
    J << f.gr.dot(basis[0]), f.gr.dot(basis[1]), f.gi.dot(basis[0]), f.gi.dot(basis[1]);
    const double det = J.determinant();
    if (!(std::abs(det) > 1e-300)) return false;
    const Vec2 d = J.partialPivLu().solve(Vec2(-f.F.real(), -f.F.imag()));
    p += d.x() * basis[0] + d.y() * basis[1];
    if (!p.allFinite()) return false;
    if (d.norm() <= 1e-15 * (1.0 + p.norm())) break;
  }
  const LocalField f = reduced(wf, p, t);
  const double g = std::max(f.gr.norm(), f.gi.norm());
  moved = (p - start).norm();
  return std::abs(f.F) <= 1e-10 * g * (1.0 + p.norm());
}

std::optional<NodalLineSample> make_sample(const Wavefunction& wf, double t, const Vec3& p,
                                           const Vec3& orient) {
  const LocalField f = reduced(wf, p, t);
  Vec3 tau = line_direction(f);
  if (tau.isZero(0.0)) return std::nullopt;
  if (tau.dot(orient) < 0.0) tau = -tau;
  NodalLineSample s;
  s.t = t;
  s.point = p;
  s.tangent = tau;
  s.basis = normal_basis(tau);
  s.residual = std::abs(f.F) / std::max(f.gr.norm(), f.gi.norm());
  return s;
}

void march(const Wavefunction& wf, double t, const NodalLineSample& start, double arc_length,
           const NodalLineOptions& opt, int sign, NodalLine& out,
           std::vector<NodalLineSample>& pts) {
  Vec3 p0 = start.point;
  Vec3 dir = sign * start.tangent;
  double s = 0.0;
  double h = opt.step;
  while (s < arc_length - 1e-12 * opt.step) {
    const double hs = std::min(h, arc_length - s);
    Vec3 p = p0 + hs * dir;
    double moved = 0.0;
    std::optional<NodalLineSample> next;
    if (correct(wf, t, p, normal_basis(dir), moved) && moved < 10.0 * hs)
      next = make_sample(wf, t, p, dir);
    if (!next || next->tangent.dot(dir) <= 0.0) {
      h *= 0.5;
      if (h < opt.min_step) {
        out.truncated = true;
        return;
      }
      continue;
    }
    out.max_jump = std::max(out.max_jump, moved);
    s += hs;
    p0 = next->point;
    dir = next->tangent;
    // Stored samples keep the orientation of the seed.
    if (sign < 0) {
      next->tangent = -next->tangent;
      next->basis = normal_basis(next->tangent);
    }
    pts.push_back(*next);
    h = std::min(opt.step, 2.0 * h);
  }
}

}  // namespace

std::optional<NodalLineSample> refine_line_point(const Wavefunction& wf, double t,
                                                 const Vec3& guess) {
  require_3d(wf);
  Vec3 p = guess;
  // Minimum-norm Newton on the underdetermined 2x3 system.
  for (int it = 0; it < 60; ++it) {
    const LocalField f = reduced(wf, p, t);
    Eigen::Matrix<double, 2, 3> J;
    J.row(0) = f.gr.transpose();
    J.row(1) = f.gi.transpose();
    const Mat2 JJt = J * J.transpose();
    if (!(std::abs(JJt.determinant()) > 1e-300)) return std::nullopt;
    const Vec3 d = -J.transpose() * JJt.partialPivLu().solve(Vec2(f.F.real(), f.F.imag()));
    p += d;
    if (!p.allFinite()) return std::nullopt;
    if (d.norm() <= 1e-15 * (1.0 + p.norm())) break;
  }
  const LocalField f = reduced(wf, p, t);
  if (!(std::abs(f.F) <= 1e-10 * std::max(f.gr.norm(), f.gi.norm()) * (1.0 + p.norm())))
    return std::nullopt;
  return make_sample(wf, t, p, line_direction(f));
}

NodalLine trace_nodal_line(const Wavefunction& wf, double t, const Vec3& seed, double arc_length,
                           const NodalLineOptions& options) {
  require_3d(wf);
  if (!(arc_length >= 0.0)) throw InputError("arc length must be non-negative");
  if (!(options.step > 0.0) || !(options.min_step > 0.0) || options.min_step > options.step)
    throw InputError("need 0 < min_step <= step");
  if (options.orientation != 1 && options.orientation != -1)
    throw InputError("orientation must be +1 or -1");
  auto first = refine_line_point(wf, t, seed);
  if (!first) throw ExperimentError("seed does not converge onto a nodal line");
  if (options.orientation < 0) {
    first->tangent = -first->tangent;
    first->basis = normal_basis(first->tangent);
  }

  NodalLine line;
  std::vector<NodalLineSample> back, fwd;
  if (options.both_directions) march(wf, t, *first, arc_length, options, -1, line, back);
  march(wf, t, *first, arc_length, options, 1, line, fwd);
  line.samples.assign(back.rbegin(), back.rend());
  line.samples.push_back(*first);
  line.samples.insert(line.samples.end(), fwd.begin(), fwd.end());
  return line;
}

XLineSample planar_complex(const Wavefunction& wf, const NodalLineSample& sample,
                           double probe_radius) {
  require_3d(wf);
  const auto& m = wf.spec.mass;
  if (m[0] != m[1] || m[1] != m[2]) throw InputError("plane reduction needs equal masses");
  if (!(probe_radius > 0.0)) throw InputError("probe radius must be positive");
  const double kappa = wf.spec.hbar / m[0];
  const Vec3& e1 = sample.basis[0];
  const Vec3& e2 = sample.basis[1];
  Eigen::Matrix<double, 3, 2> B;
  B.col(0) = e1;
  B.col(1) = e2;

  const FieldSample s = eval(wf, Vec(sample.point), sample.t);
  Eigen::Vector3cd g3(s.grad[0], s.grad[1], s.grad[2]);
  Eigen::Matrix3cd H3;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) H3(i, j) = s.hess(i, j);
  const Eigen::Matrix<complex, 3, 2> Bc = B.cast<complex>();
  const Eigen::Vector2cd g = Bc.transpose() * g3;
  const Eigen::Matrix2cd H = Bc.transpose() * H3 * Bc;

  // The plane is fixed; its intersection with the moving line moves with
  // -J^{-1} d/dt (Re psi, Im psi).
  Mat2 J;
  J << g[0].real(), g[1].real(), g[0].imag(), g[1].imag();
  if (!(std::abs(J.determinant()) > 0.0)) throw SingularFrameError("line is tangent to its plane");
  const Vec2 V = J.partialPivLu().solve(Vec2(-s.dpsi_dt.real(), -s.dpsi_dt.imag()));

  XLineSample out;
  out.line = sample;
  out.node_velocity = V;
  out.expansion =
      expansion_from_derivatives(sample.t, Vec2::Zero(), Mat2::Identity(), g, H, V, kappa);
  if (V.norm() > 0.0) out.xpoints = find_x_point(out.expansion, V);
  try {
    out.f3 = f3_average(out.expansion, V).f3;
  } catch (const UndefinedAverageError&) {
  }

  double w_max = 0.0, speed_min = std::numeric_limits<double>::infinity();
  const int n = 16;
  for (int k = 0; k < n; ++k) {
    const double th = 2.0 * kPi * k / n;
    const Vec3 p = sample.point + probe_radius * (std::cos(th) * e1 + std::sin(th) * e2);
    const Vec v = velocity(wf, Vec(p), sample.t);
    const Vec3 v3(v[0], v[1], v[2]);
    const double w = v3.dot(sample.tangent);
    if (std::abs(w) > std::abs(w_max)) w_max = w;
    speed_min = std::min(speed_min, (B.transpose() * v3 - V).norm());
  }
  out.w_velocity = w_max;
  out.inplane_speed = speed_min;
  return out;
}

std::vector<std::vector<Vec3>> XLine::segments() const {
  std::vector<std::vector<Vec3>> segs;
  bool open = false;
  for (const auto& v : vertices) {
    if (!v.present) {
      open = false;
      continue;
    }
    if (!open) segs.emplace_back();
    segs.back().push_back(v.pos);
    open = true;
  }
  return segs;
}

XLine assemble_x_line(const std::vector<XLineSample>& samples) {
  XLine line;
  line.vertices.reserve(samples.size());
  for (const auto& s : samples) {
    XLineVertex v;
    if (s.xpoints.found()) {
      const XPoint& x = s.xpoints.saddles.front();
      v.present = true;
      v.pos = s.line.point + x.pos.x() * s.line.basis[0] + x.pos.y() * s.line.basis[1];
      v.R = x.R;
    }
    line.vertices.push_back(v);
  }
  return line;
}

double invariant_value(const InvariantSpec& spec, const Vec& q) {
  if (q.size() != 3) throw InputError("invariant needs a 3D point");
  if (spec.log_axis < 0 || spec.log_axis > 2) throw InputError("log axis out of range");
  const double xl = q[spec.log_axis];
  if (xl == 0.0 || !std::isfinite(xl))
    throw SingularInvariantError("invariant undefined on the plane x" +
                                     std::to_string(spec.log_axis + 1) + " = 0",
                                 std::numeric_limits<double>::quiet_NaN());
  return spec.c[0] * q[0] * q[0] + spec.c[1] * q[1] * q[1] + spec.c[2] * q[2] * q[2] +
         spec.log_coef * std::log(std::abs(xl));
}

ConservationReport check_conservation(const Wavefunction& wf, const InvariantSpec& spec,
                                      const Vec& q0, double t0, double t1,
                                      const IntegratorSettings& settings, double sample_interval) {
  require_3d(wf);
  IntegratorSettings st = settings;
  if (sample_interval > 0.0) st.sample_interval = sample_interval;
  const double C0 = invariant_value(spec, q0);
  if (C0 == 0.0) throw InputError("relative drift undefined for C0 = 0");
  const auto traj = integrate(wf, q0, t0, t1, st);
  ConservationReport rep;
  rep.C0 = C0;
  rep.t_end = traj.back().t;
  const double side = q0[spec.log_axis];
  for (const auto& smp : traj) {
    if (smp.q[spec.log_axis] * side <= 0.0)
      throw SingularInvariantError("trajectory crossed the singular plane of the invariant",
                                   smp.t);
    rep.max_drift = std::max(rep.max_drift, std::abs(invariant_value(spec, smp.q) - C0) /
                                                std::abs(C0));
    ++rep.samples;
  }
  return rep;
}

ProbeReport partial_integrability_probe(const Wavefunction& wf, const std::vector<Vec>& starts,
                                        double t0, double t1, const IntegratorSettings& settings,
                                        double sample_interval, int threads) {
  require_3d(wf);
  if (starts.size() < 2) throw InputError("the probe needs at least two trajectories");
  IntegratorSettings st = settings;
  if (sample_interval > 0.0) st.sample_interval = sample_interval;

  std::vector<std::vector<Vec>> paths(starts.size());
  std::vector<char> ok(starts.size(), 0);
  parallel_for(starts.size(), threads, [&](std::size_t i) {
    try {
      const auto traj = integrate(wf, starts[i], t0, t1, st);
      for (const auto& s : traj) paths[i].push_back(s.q);
      ok[i] = 1;
    } catch (const NodeProximityError&) {
    } catch (const StiffEncounterError&) {
    }
  });

  ProbeReport rep;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    if (ok[i])
      ++rep.trajectories;
    else
      ++rep.dropped;
  }
  if (rep.trajectories < 2) throw ExperimentError("fewer than two trajectories survived");

  // Logs only for axes that keep one sign along every trajectory.
  std::vector<int> log_axes;
  for (int k = 0; k < 3; ++k) {
    bool fixed = true;
    for (std::size_t i = 0; i < paths.size() && fixed; ++i) {
      if (!ok[i]) continue;
      const double s0 = paths[i].front()[k];
      for (const auto& q : paths[i])
        if (!(q[k] * s0 > 0.0)) {
          fixed = false;
          break;
        }
    }
    if (fixed) log_axes.push_back(k);
  }
  for (int k = 0; k < 3; ++k) rep.basis.push_back("x" + std::to_string(k + 1) + "^2");
  for (int k : log_axes) rep.basis.push_back("ln|x" + std::to_string(k + 1) + "|");
  const int nb = int(rep.basis.size());
  const auto features = [&](const Vec& q) {
    Eigen::VectorXd f(nb);
    for (int k = 0; k < 3; ++k) f[k] = q[k] * q[k];
    for (std::size_t j = 0; j < log_axes.size(); ++j) f[3 + j] = std::log(std::abs(q[log_axes[j]]));
    return f;
  };

  Eigen::VectorXd mean_all = Eigen::VectorXd::Zero(nb);
  std::size_t n_all = 0;
  std::vector<Eigen::VectorXd> means(paths.size(), Eigen::VectorXd::Zero(nb));
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (!ok[i]) continue;
    for (const auto& q : paths[i]) means[i] += features(q);
    mean_all += means[i];
    n_all += paths[i].size();
    means[i] /= double(paths[i].size());
  }
  mean_all /= double(n_all);
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(nb, nb), T = Eigen::MatrixXd::Zero(nb, nb);
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (!ok[i]) continue;
    for (const auto& q : paths[i]) {
      const Eigen::VectorXd f = features(q);
      const Eigen::VectorXd dw = f - means[i], dt = f - mean_all;
      W += dw * dw.transpose();
      T += dt * dt.transpose();
    }
  }
  W /= double(n_all);
  T /= double(n_all);

  // Whiten by T, dropping directions with no spread at all.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> et(T);
  const Eigen::VectorXd tv = et.eigenvalues();
  const double cut = 1e-12 * tv.maxCoeff();
  std::vector<int> keep;
  for (int j = 0; j < nb; ++j)
    if (tv[j] > cut) keep.push_back(j);
  Eigen::MatrixXd P(nb, keep.size());
  for (std::size_t j = 0; j < keep.size(); ++j)
    P.col(j) = et.eigenvectors().col(keep[j]) / std::sqrt(tv[keep[j]]);
  const Eigen::MatrixXd Wr = P.transpose() * W * P;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ew(Wr);
  const double lam = std::max(0.0, ew.eigenvalues()[0]);
  rep.score = std::sqrt(lam);
  Eigen::VectorXd alpha = P * ew.eigenvectors().col(0);
  const Eigen::Index top = [&] {
    Eigen::Index k;
    alpha.cwiseAbs().maxCoeff(&k);
    return k;
  }();
  alpha /= alpha[top];
  rep.coefficients.assign(alpha.data(), alpha.data() + nb);
  return rep;
}

}  // namespace bohm
