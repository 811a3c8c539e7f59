#pragma once

#include <stdexcept>
#include <string>

#include "bohm/types.hpp"

namespace bohm {

// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed arguments: wrong dimension, invalid parameters.
class InputError : public Error {
 public:
  using Error::Error;
};

// The Bohmian velocity is undefined because |psi| fell below the floor.
class NodeProximityError : public Error {
 public:
  NodeProximityError(const Vec& q, double t, double abs_psi);

  Vec q;
  double t;
  double abs_psi;
};

// Adaptive step size collapsed; carries the last accepted state.
class StiffEncounterError : public Error {
 public:
  StiffEncounterError(double t, const Vec& q, double step);

  double t;
  Vec q;
  double step;
};

class SingularFrameError : public Error {
 public:
  using Error::Error;
};

// Derivative identities that must hold exactly were violated.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class UndefinedAverageError : public Error {
 public:
  using Error::Error;
};

class DegenerateSeriesError : public Error {
 public:
  using Error::Error;
};

class ResonanceError : public Error {
 public:
  ResonanceError(const std::string& what, double t);
  double t;
};

class SingularInvariantError : public Error {
 public:
  SingularInvariantError(const std::string& what, double t);
  double t;
};

class EnvelopeError : public Error {
 public:
  using Error::Error;
};

class ExperimentError : public Error {
 public:
  using Error::Error;
};

}  // namespace bohm
