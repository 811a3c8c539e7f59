#include "bohm/wavefield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "bohm/errors.hpp"

namespace bohm {

namespace {

constexpr complex kI{0.0, 1.0};

void check_dim(const Wavefunction& wf, const Vec& q) {
  if (q.size() != wf.spec.dim)
    throw InputError("position has " + std::to_string(q.size()) + " components, model is " +
                     std::to_string(wf.spec.dim) + "D");
}

// Normalized Hermite functions without their Gaussian: p_n(xi) with
// p_0 = (m w / pi hbar)^{1/4}.
void hermite_table(double xi, double p0, int nmax, double* p) {
  p[0] = p0;
  if (nmax >= 1) p[1] = std::sqrt(2.0) * xi * p0;
  for (int n = 1; n < nmax; ++n)
    p[n + 1] = std::sqrt(2.0 / (n + 1)) * xi * p[n] - std::sqrt(double(n) / (n + 1)) * p[n - 1];
}

FieldSample zero_sample(int d) {
  FieldSample s;
  s.psi = 0.0;
  s.grad = CVec::Zero(d);
  s.hess = CMat::Zero(d, d);
  s.dpsi_dt = 0.0;
  return s;
}

FieldSample reduced_terms(const Wavefunction& wf, const Vec& q, double t) {
  const int d = wf.spec.dim;
  std::array<int, 3> nmax{0, 0, 0};
  for (const auto& term : wf.terms)
    for (int k = 0; k < d; ++k) nmax[k] = std::max(nmax[k], term.n[k]);

  std::array<std::array<double, kMaxQuantum + 1>, 3> p;
  std::array<double, 3> s{};
  for (int k = 0; k < d; ++k) {
    s[k] = wf.spec.scale(k);
    hermite_table(s[k] * q[k], std::sqrt(s[k]) * std::pow(kPi, -0.25), nmax[k], p[k].data());
  }

  FieldSample out = zero_sample(d);
  for (const auto& term : wf.terms) {
    const complex w = term.amp * std::exp(-kI * (term.energy * t / wf.spec.hbar));
    double P[3], D1[3], D2[3];
    for (int k = 0; k < d; ++k) {
      const int n = term.n[k];
      P[k] = p[k][n];
      D1[k] = n >= 1 ? s[k] * std::sqrt(2.0 * n) * p[k][n - 1] : 0.0;
      D2[k] = n >= 2 ? s[k] * s[k] * 2.0 * std::sqrt(double(n) * (n - 1)) * p[k][n - 2] : 0.0;
    }
    double prod = 1.0;
    for (int k = 0; k < d; ++k) prod *= P[k];
    out.psi += w * prod;
    out.dpsi_dt += -kI * (term.energy / wf.spec.hbar) * w * prod;
    for (int j = 0; j < d; ++j) {
      double rest = 1.0;
      for (int k = 0; k < d; ++k)
        if (k != j) rest *= P[k];
      out.grad[j] += w * D1[j] * rest;
      out.hess(j, j) += w * D2[j] * rest;
      for (int l = j + 1; l < d; ++l) {
        double r2 = 1.0;
        for (int k = 0; k < d; ++k)
          if (k != j && k != l) r2 *= P[k];
        const complex h = w * D1[j] * D1[l] * r2;
        out.hess(j, l) += h;
        out.hess(l, j) += h;
      }
    }
  }
  return out;
}

FieldSample reduced_closed(const Wavefunction& wf, const Vec& q, double t) {
  const double x = q[0], y = q[1];
  const double a = wf.a, c = wf.c, beta = wf.b * std::sqrt(c);
  const complex ph = std::exp(-kI * (0.5 * (1.0 + c) * t));
  const complex e11 = std::exp(-kI * ((1.0 + c) * t));
  FieldSample out = zero_sample(2);
  complex Q, Qx, Qxx = 0.0, Qt;
  if (wf.tag == ModelTag::eq12) {
    const complex e1 = std::exp(-kI * t);
    Q = 1.0 + a * x * e1 + beta * x * y * e11;
    Qx = a * e1 + beta * y * e11;
    Qt = -kI * (a * x * e1) - kI * ((1.0 + c) * beta * x * y) * e11;
  } else {
    const complex e2 = std::exp(-2.0 * kI * t);
    Q = 1.0 + a * (x * x - 0.5) * e2 + beta * x * y * e11;
    Qx = 2.0 * a * x * e2 + beta * y * e11;
    Qxx = 2.0 * a * e2;
    Qt = -2.0 * kI * (a * (x * x - 0.5)) * e2 - kI * ((1.0 + c) * beta * x * y) * e11;
  }
  const complex Qy = beta * x * e11;
  const complex Qxy = beta * e11;
  out.psi = ph * Q;
  out.grad << ph * Qx, ph * Qy;
  out.hess << ph * Qxx, ph * Qxy, ph * Qxy, 0.0;
  out.dpsi_dt = ph * Qt - kI * (0.5 * (1.0 + c)) * out.psi;
  return out;
}

FieldSample restore_envelope(const Wavefunction& wf, const Vec& q, FieldSample r) {
  const int d = wf.spec.dim;
  Vec dL(d);
  double L = 0.0;
  for (int k = 0; k < d; ++k) {
    const double s2 = wf.spec.scale(k) * wf.spec.scale(k);
    L -= 0.5 * s2 * q[k] * q[k];
    dL[k] = -s2 * q[k];
  }
  const double g = std::exp(L);
  const CVec dLc = dL.cast<complex>();
  FieldSample out;
  out.psi = g * r.psi;
  out.grad = g * (r.grad + r.psi * dLc);
  out.hess = r.hess + r.grad * dLc.transpose() + dLc * r.grad.transpose() +
             r.psi * (dLc * dLc.transpose());
  for (int k = 0; k < d; ++k) {
    const double s = wf.spec.scale(k);
    out.hess(k, k) -= r.psi * (s * s);
  }
  out.hess *= g;
  out.dpsi_dt = g * r.dpsi_dt;
  return out;
}

double reduced_xi2(const Wavefunction& wf, const Vec& q) {
  double xi2 = 0.0;
  for (int k = 0; k < wf.spec.dim; ++k)
    xi2 += wf.spec.mass[k] * wf.spec.omega[k] / wf.spec.hbar * q[k] * q[k];
  return xi2;
}

// Returns xi2 so callers need not recompute it.
double check_floor(const Wavefunction& wf, const Vec& q, double t, const complex& F, double floor) {
  const double f2 = std::norm(F);
  const double xi2 = reduced_xi2(wf, q);
  // Cheap acceptance for the common case; the exponential is only needed
  // when either factor is tiny.
  if (floor <= 1e-300 && f2 >= 1e-300 && xi2 < 180.0) return xi2;
  const double af = std::sqrt(f2);
  const double abs_psi = af * std::exp(-0.5 * xi2);
  if (!(abs_psi >= floor) || af == 0.0) throw NodeProximityError(q, t, abs_psi);
  return xi2;
}


// Velocity of the tagged 2D models straight from the polynomial factor; the
// global phase and the Gaussian drop out of Im(grad psi / psi).
FlowSample closed_flow(const Wavefunction& wf, const Vec& q, double t, bool with_jacobian,
                       double floor) {
  const double x = q[0], y = q[1];
  const double a = wf.a, c = wf.c, beta = wf.b * std::sqrt(c);
  const complex e11 = std::polar(1.0, -(1.0 + c) * t);
  complex Q, Qx, Qxx = 0.0;
  if (wf.tag == ModelTag::eq12) {
    const complex e1 = std::polar(1.0, -t);
    Q = 1.0 + a * x * e1 + beta * x * y * e11;
    Qx = a * e1 + beta * y * e11;
  } else {
    const complex e2 = std::polar(1.0, -2.0 * t);
    Q = 1.0 + a * (x * x - 0.5) * e2 + beta * x * y * e11;
    Qx = 2.0 * a * x * e2 + beta * y * e11;
    Qxx = 2.0 * a * e2;
  }
  const complex Qy = beta * x * e11;
  const double xi2 = check_floor(wf, q, t, Q, floor);
  const double q2 = std::norm(Q);
  const complex inv = std::conj(Q) / q2;
  const complex gx = Qx * inv, gy = Qy * inv;
  const double kx = wf.spec.hbar / wf.spec.mass[0], ky = wf.spec.hbar / wf.spec.mass[1];
  FlowSample out;
  out.v.resize(2);
  out.v << kx * gx.imag(), ky * gy.imag();
  if (with_jacobian) {
    const complex hxy = beta * e11 * inv;
    out.jac.resize(2, 2);
    out.jac << kx * (Qxx * inv - gx * gx).imag(), kx * (hxy - gx * gy).imag(),
        ky * (hxy - gx * gy).imag(), ky * (-gy * gy).imag();
  }
  out.abs_reduced = std::sqrt(q2);
  out.xi2 = xi2;
  const double gn = std::sqrt(std::norm(Qx) + std::norm(Qy));
  out.node_distance = gn > 0.0 ? out.abs_reduced / gn : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace

void OscillatorSpec::validate() const {
  if (dim != 2 && dim != 3) throw InputError("dimension must be 2 or 3");
  if (!(hbar > 0.0) || !std::isfinite(hbar)) throw InputError("hbar must be positive");
  for (int k = 0; k < dim; ++k) {
    if (!(mass[k] > 0.0) || !std::isfinite(mass[k])) throw InputError("masses must be positive");
    if (!(omega[k] > 0.0) || !std::isfinite(omega[k]))
      throw InputError("frequencies must be positive");
  }
}

double OscillatorSpec::scale(int k) const { return std::sqrt(mass[k] * omega[k] / hbar); }

double eigen_energy(const OscillatorSpec& spec, const Quanta& n) {
  double e = 0.0;
  for (int k = 0; k < spec.dim; ++k) e += spec.hbar * spec.omega[k] * (0.5 + n[k]);
  return e;
}

Wavefunction make_wavefunction(const OscillatorSpec& spec, std::vector<EigenstateTerm> terms,
                               std::string name) {
  spec.validate();
  if (terms.empty()) throw InputError("a wavefunction needs at least one term");
  for (auto& term : terms) {
    for (int k = 0; k < 3; ++k) {
      if (term.n[k] < 0 || term.n[k] > kMaxQuantum)
        throw InputError("quantum numbers must lie in [0, 50]");
      if (k >= spec.dim && term.n[k] != 0)
        throw InputError("quantum number given for an absent axis");
    }
    if (!std::isfinite(term.amp.real()) || !std::isfinite(term.amp.imag()))
      throw InputError("amplitudes must be finite");
    term.energy = eigen_energy(spec, term.n);
  }
  Wavefunction wf;
  wf.spec = spec;
  wf.terms = std::move(terms);
  wf.name = std::move(name);
  return wf;
}

Wavefunction single_eigenstate(const OscillatorSpec& spec, const Quanta& n) {
  return make_wavefunction(spec, {EigenstateTerm{n, 1.0, 0.0}}, "eigenstate");
}

namespace {

Wavefunction tagged_2d(ModelTag tag, double a, double b, double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw InputError("frequency ratio c must be positive");
  if (!std::isfinite(a) || !std::isfinite(b)) throw InputError("amplitudes must be finite");
  OscillatorSpec spec;
  spec.dim = 2;
  spec.omega = {1.0, c, 1.0};
  // p_0(x) p_0(sqrt(c) y) at the origin
  const double n0 = std::pow(kPi, -0.25) * std::pow(c / kPi, 0.25);
  std::vector<EigenstateTerm> terms;
  terms.push_back({{0, 0, 0}, 1.0 / n0, 0.0});
  if (tag == ModelTag::eq12)
    terms.push_back({{1, 0, 0}, a / (std::sqrt(2.0) * n0), 0.0});
  else
    terms.push_back({{2, 0, 0}, a / (std::sqrt(2.0) * n0), 0.0});
  terms.push_back({{1, 1, 0}, b / (2.0 * n0), 0.0});
  Wavefunction wf = make_wavefunction(spec, std::move(terms),
                                      tag == ModelTag::eq12 ? "model-eq12" : "model-eq30");
  wf.tag = tag;
  wf.a = a;
  wf.b = b;
  wf.c = c;
  return wf;
}

}  // namespace

Wavefunction model_eq12(double a, double b, double c) { return tagged_2d(ModelTag::eq12, a, b, c); }

Wavefunction model_eq30(double a, double b, double c) { return tagged_2d(ModelTag::eq30, a, b, c); }

Wavefunction model_3d(const std::array<Quanta, 3>& n, const std::array<complex, 3>& amp,
                      const std::array<double, 3>& omega) {
  OscillatorSpec spec;
  spec.dim = 3;
  spec.omega = omega;
  std::vector<EigenstateTerm> terms;
  for (int j = 0; j < 3; ++j) terms.push_back({n[j], amp[j], 0.0});
  return make_wavefunction(spec, std::move(terms), "model-3d");
}

Wavefunction model_3d_integrable(const std::array<complex, 3>& amp) {
  Wavefunction wf = model_3d({Quanta{1, 0, 0}, Quanta{0, 1, 0}, Quanta{0, 0, 2}}, amp,
                             {1.0, std::sqrt(2.0), std::sqrt(3.0)});
  wf.name = "model-3d-integrable";
  return wf;
}

Wavefunction model_3d_integrable() {
  const double s = 1.0 / std::sqrt(3.0);
  return model_3d_integrable({s, s, s});
}

Wavefunction without_closed_form(Wavefunction wf) {
  wf.tag = ModelTag::none;
  return wf;
}

FieldSample eval_reduced(const Wavefunction& wf, const Vec& q, double t) {
  check_dim(wf, q);
  if (wf.tag != ModelTag::none) return reduced_closed(wf, q, t);
  return reduced_terms(wf, q, t);
}

FieldSample eval(const Wavefunction& wf, const Vec& q, double t) {
  return restore_envelope(wf, q, eval_reduced(wf, q, t));
}

FieldSample eval_terms(const Wavefunction& wf, const Vec& q, double t) {
  check_dim(wf, q);
  return restore_envelope(wf, q, reduced_terms(wf, q, t));
}

double envelope(const Wavefunction& wf, const Vec& q) {
  check_dim(wf, q);
  return std::exp(-0.5 * reduced_xi2(wf, q));
}

double density(const Wavefunction& wf, const Vec& q, double t) {
  const complex F = eval_reduced(wf, q, t).psi;
  return std::norm(F) * std::exp(-reduced_xi2(wf, q));
}

double density_bound(const Wavefunction& wf) {
  double per_term = 1.0;
  for (int k = 0; k < wf.spec.dim; ++k) per_term *= std::sqrt(wf.spec.scale(k)) * std::pow(kPi, -0.25);
  double sum = 0.0;
  for (const auto& term : wf.terms) sum += std::abs(term.amp);
  return std::pow(sum * per_term, 2);
}

FlowSample flow(const Wavefunction& wf, const Vec& q, double t, bool with_jacobian,
                double floor) {
  if (wf.tag != ModelTag::none) {
    check_dim(wf, q);
    return closed_flow(wf, q, t, with_jacobian, floor);
  }
  const FieldSample r = eval_reduced(wf, q, t);
  const double xi2 = check_floor(wf, q, t, r.psi, floor);
  const int d = wf.spec.dim;
  const complex inv = 1.0 / r.psi;
  const CVec gl = r.grad * inv;
  FlowSample out;
  out.v.resize(d);
  for (int k = 0; k < d; ++k) out.v[k] = wf.spec.hbar / wf.spec.mass[k] * gl[k].imag();
  if (with_jacobian) {
    out.jac.resize(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        out.jac(i, j) =
            wf.spec.hbar / wf.spec.mass[i] * (r.hess(i, j) * inv - gl[i] * gl[j]).imag();
  }
  out.abs_reduced = std::abs(r.psi);
  out.xi2 = xi2;
  const double gn = r.grad.norm();
  out.node_distance = gn > 0.0 ? out.abs_reduced / gn : std::numeric_limits<double>::infinity();
  return out;
}

Vec velocity(const Wavefunction& wf, const Vec& q, double t, double floor) {
  return flow(wf, q, t, false, floor).v;
}

Mat velocity_jacobian(const Wavefunction& wf, const Vec& q, double t, double floor) {
  return flow(wf, q, t, true, floor).jac;
}

}  // namespace bohm
