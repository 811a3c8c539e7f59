#include "bohm/errors.hpp"

#include <sstream>

namespace bohm {

namespace {

std::string describe_point(const char* head, const Vec& q, double t) {
  std::ostringstream os;
  os.precision(10);
  os << head << " at t=" << t << ", q=(";
  for (int i = 0; i < q.size(); ++i) os << (i ? ", " : "") << q[i];
  os << ")";
  return os.str();
}

}  // namespace

NodeProximityError::NodeProximityError(const Vec& q_, double t_, double abs_psi_)
    : Error(describe_point("velocity undefined near a node", q_, t_) +
            ", |psi|=" + std::to_string(abs_psi_)),
      q(q_), t(t_), abs_psi(abs_psi_) {}

StiffEncounterError::StiffEncounterError(double t_, const Vec& q_, double step_)
    : Error(describe_point("step size underflow", q_, t_) + ", h=" + std::to_string(step_)),
      t(t_), q(q_), step(step_) {}

ResonanceError::ResonanceError(const std::string& what, double t_) : Error(what), t(t_) {}

SingularInvariantError::SingularInvariantError(const std::string& what, double t_)
    : Error(what), t(t_) {}

}  // namespace bohm
