#pragma once

#include <cmath>
#include <random>

#include "bohm/types.hpp"

namespace testing {

inline bohm::Vec vec(double x, double y) {
  bohm::Vec q(2);
  q << x, y;
  return q;
}

inline bohm::Vec vec(double x, double y, double z) {
  bohm::Vec q(3);
  q << x, y, z;
  return q;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

inline double rel_err(std::complex<double> a, std::complex<double> b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

// Seeded per test so failures reproduce.
struct Sampler {
  std::mt19937_64 rng;
  explicit Sampler(unsigned long seed) : rng(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  bohm::Vec point(int dim, double half) {
    bohm::Vec q(dim);
    for (int k = 0; k < dim; ++k) q(k) = uniform(-half, half);
    return q;
  }
};

// The moving node of the eq12 model, written out directly.
inline bohm::Vec2 eq12_node(double a, double b, double c, double t) {
  return {-std::sin((1 + c) * t) / (a * std::sin(c * t)),
          -a * std::sin(t) / (b * std::sqrt(c) * std::sin((1 + c) * t))};
}

}  // namespace testing
