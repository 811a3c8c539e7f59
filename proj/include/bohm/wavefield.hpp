#pragma once

#include <array>
#include <string>
#include <vector>

#include "bohm/types.hpp"

namespace bohm {

using Quanta = std::array<int, 3>;

inline constexpr int kMaxQuantum = 50;

struct OscillatorSpec {
  int dim = 2;
  std::array<double, 3> mass{1.0, 1.0, 1.0};
  std::array<double, 3> omega{1.0, 1.0, 1.0};
  double hbar = 1.0;

  void validate() const;
  // sqrt(m w / hbar), the inverse length scale of each axis
  double scale(int k) const;
};

struct EigenstateTerm {
  Quanta n{0, 0, 0};
  complex amp{1.0, 0.0};
  double energy = 0.0;
};

// Models with a hand-written closed form; everything else goes through the
// Hermite term list.
enum class ModelTag { none, eq12, eq30 };

struct Wavefunction {
  OscillatorSpec spec;
  std::vector<EigenstateTerm> terms;
  ModelTag tag = ModelTag::none;
  double a = 0.0, b = 0.0, c = 0.0;
  std::string name;
};

struct FieldSample {
  complex psi;
  CVec grad;
  CMat hess;
  complex dpsi_dt;
};

double eigen_energy(const OscillatorSpec& spec, const Quanta& n);

// Fills energies and checks the invariants.
Wavefunction make_wavefunction(const OscillatorSpec& spec, std::vector<EigenstateTerm> terms,
                               std::string name = "terms");

Wavefunction single_eigenstate(const OscillatorSpec& spec, const Quanta& n);

// psi = exp(-(x^2+c y^2)/2 - i(1+c)t/2) (1 + a x e^{-it} + b sqrt(c) x y e^{-i(1+c)t})
Wavefunction model_eq12(double a, double b, double c);

// psi = exp(-(x^2+c y^2)/2 - i(1+c)t/2) (1 + a (x^2-1/2) e^{-2it} + b sqrt(c) x y e^{-i(1+c)t})
Wavefunction model_eq30(double a, double b, double c);

// a Psi_p + b Psi_r + c Psi_s for a 3D oscillator with unit masses.
Wavefunction model_3d(const std::array<Quanta, 3>& n, const std::array<complex, 3>& amp,
                      const std::array<double, 3>& omega);

// (1,0,0), (0,1,0), (0,0,2) with omega = (1, sqrt2, sqrt3).
Wavefunction model_3d_integrable(const std::array<complex, 3>& amp);
Wavefunction model_3d_integrable();

// Same wavefunction with every term evaluated through the Hermite list.
Wavefunction without_closed_form(Wavefunction wf);

FieldSample eval(const Wavefunction& wf, const Vec& q, double t);
FieldSample eval_terms(const Wavefunction& wf, const Vec& q, double t);

// psi divided by its Gaussian envelope exp(-sum m w x^2 / 2 hbar). Same zero
// set and velocity field as psi, but no underflow far from the origin.
FieldSample eval_reduced(const Wavefunction& wf, const Vec& q, double t);

double envelope(const Wavefunction& wf, const Vec& q);

Vec velocity(const Wavefunction& wf, const Vec& q, double t, double floor = 1e-300);
Mat velocity_jacobian(const Wavefunction& wf, const Vec& q, double t, double floor = 1e-300);

// Upper bound of |psi|^2 over all space (Cramer's inequality per term).
double density_bound(const Wavefunction& wf);

double density(const Wavefunction& wf, const Vec& q, double t);

struct FlowSample {
  Vec v;
  Mat jac;
  double abs_reduced;  // |psi| / envelope
  double node_distance;  // |F| / |grad F|, a first-order distance to the nearest zero
  double xi2;  // sum of m w x^2 / hbar; |psi| = abs_reduced exp(-xi2 / 2)
};

// Velocity (and optionally its Jacobian) plus the quantities the node guard
// needs, from a single evaluation. Throws NodeProximityError like velocity().
FlowSample flow(const Wavefunction& wf, const Vec& q, double t, bool with_jacobian,
                double floor = 1e-300);

}  // namespace bohm
