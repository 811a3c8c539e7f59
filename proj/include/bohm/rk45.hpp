#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "bohm/errors.hpp"
#include "bohm/types.hpp"

namespace bohm {

struct RkOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  double min_step = 1e-14;
  long max_steps = 200'000'000;
};

// Dormand-Prince 5(4) with FSAL and a PI step controller. Works in either
// time direction and always lands exactly on the requested target times.
//
// System requirements:
//   void rhs(double t, const S& y, S& dy);
//   double step_cap(double t, const S& y, const S& dy);   // max |h|, inf if none
//   Vec position(const S& y) const;
template <class System, class S = State>
class DormandPrince {
 public:
  DormandPrince(System& sys, double t0, const S& y0, const RkOptions& opt)
      : sys_(sys), opt_(opt), t_(t0), y_(y0) {
    sys_.rhs(t_, y_, k1_);
  }

  double t() const { return t_; }
  const S& y() const { return y_; }
  double last_step() const { return h_last_; }
  long steps() const { return accepted_; }

  // Replace the state at the current time (e.g. after renormalizing a
  // deviation vector). The step size estimate is kept.
  void reset_state(const S& y) {
    y_ = y;
    sys_.rhs(t_, y_, k1_);
  }

  void advance_to(double target) {
    if (target == t_) return;
    const double dir = target > t_ ? 1.0 : -1.0;
    if (h_ == 0.0 || dir * h_ < 0.0) h_ = dir * initial_step(dir);
    while (dir * (target - t_) > 0.0) {
      if (accepted_ + rejected_ > opt_.max_steps)
        throw StiffEncounterError(t_, sys_.position(y_), std::abs(h_));
      double h = dir * std::min({std::abs(h_), opt_.max_step, sys_.step_cap(t_, y_, k1_)});
      const double nominal = h;
      bool clamped = false;
      const double rest = target - t_;
      if (std::abs(h) >= std::abs(rest) * (1.0 - 1e-12)) {
        h = rest;
        clamped = true;
      }
      if (std::abs(h) < opt_.min_step && !clamped)
        throw StiffEncounterError(t_, sys_.position(y_), std::abs(h));
      const double err = attempt(h);
      if (err <= 1.0) {
        const double fac11 = std::pow(err, kExpo1);
        double fac = fac11 / std::pow(facold_, kBeta);
        fac = std::max(1.0 / kFacMax, std::min(1.0 / kFacMin, fac / kSafe));
        double hnew = h / fac;
        if (last_rejected_) hnew = dir * std::min(std::abs(hnew), std::abs(h));
        facold_ = std::max(err, 1e-4);
        t_ = clamped ? target : t_ + h;
        y_ = ynew_;
        k1_ = k7_;
        h_last_ = h;
        ++accepted_;
        last_rejected_ = false;
        h_ = clamped ? dir * std::max(std::abs(hnew), std::abs(nominal)) : hnew;
      } else {
        const double fac11 = std::pow(err, kExpo1);
        h_ = h / std::min(1.0 / kFacMin, fac11 / kSafe);
        ++rejected_;
        last_rejected_ = true;
        if (std::abs(h_) < opt_.min_step)
          throw StiffEncounterError(t_, sys_.position(y_), std::abs(h_));
      }
    }
  }

 private:
  static constexpr double kBeta = 0.04;
  static constexpr double kExpo1 = 0.2 - 0.75 * kBeta;
  static constexpr double kFacMin = 0.2;
  static constexpr double kFacMax = 10.0;
  static constexpr double kSafe = 0.9;

  double scaled_norm(const S& v, const S& ref_a, const S& ref_b) const {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double sk =
          opt_.abs_tol + opt_.rel_tol * std::max(std::abs(ref_a[i]), std::abs(ref_b[i]));
      acc += (v[i] / sk) * (v[i] / sk);
    }
    return std::sqrt(acc / double(v.size()));
  }

  double initial_step(double dir) {
    const double d0 = scaled_norm(y_, y_, y_);
    const double d1 = scaled_norm(k1_, y_, y_);
    double h0 = (d0 < 1e-10 || d1 < 1e-10) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min({h0, opt_.max_step, sys_.step_cap(t_, y_, k1_)});
    S y1 = y_ + dir * h0 * k1_;
    S f1(y_.size());
    sys_.rhs(t_ + dir * h0, y1, f1);
    const double d2 = scaled_norm(S(f1 - k1_), y_, y_) / h0;
    const double m = std::max(d1, d2);
    const double h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 0.2);
    return std::max(std::min({100.0 * h0, h1, opt_.max_step}), opt_.min_step);
  }

  double attempt(double h) {
    const double t = t_;
    const S& y = y_;
    tmp_ = y + h * (1.0 / 5.0) * k1_;
    sys_.rhs(t + h / 5.0, tmp_, k2_);
    tmp_ = y + h * (3.0 / 40.0 * k1_ + 9.0 / 40.0 * k2_);
    sys_.rhs(t + 3.0 * h / 10.0, tmp_, k3_);
    tmp_ = y + h * (44.0 / 45.0 * k1_ - 56.0 / 15.0 * k2_ + 32.0 / 9.0 * k3_);
    sys_.rhs(t + 4.0 * h / 5.0, tmp_, k4_);
    tmp_ = y + h * (19372.0 / 6561.0 * k1_ - 25360.0 / 2187.0 * k2_ + 64448.0 / 6561.0 * k3_ -
                    212.0 / 729.0 * k4_);
    sys_.rhs(t + 8.0 * h / 9.0, tmp_, k5_);
    tmp_ = y + h * (9017.0 / 3168.0 * k1_ - 355.0 / 33.0 * k2_ + 46732.0 / 5247.0 * k3_ +
                    49.0 / 176.0 * k4_ - 5103.0 / 18656.0 * k5_);
    sys_.rhs(t + h, tmp_, k6_);
    ynew_ = y + h * (35.0 / 384.0 * k1_ + 500.0 / 1113.0 * k3_ + 125.0 / 192.0 * k4_ -
                     2187.0 / 6784.0 * k5_ + 11.0 / 84.0 * k6_);
    sys_.rhs(t + h, ynew_, k7_);
    err_ = h * (71.0 / 57600.0 * k1_ - 71.0 / 16695.0 * k3_ + 71.0 / 1920.0 * k4_ -
                17253.0 / 339200.0 * k5_ + 22.0 / 525.0 * k6_ - 1.0 / 40.0 * k7_);
    for (Eigen::Index i = 0; i < ynew_.size(); ++i)
      if (!std::isfinite(ynew_[i])) return 1e10;
    return scaled_norm(err_, y, ynew_);
  }

  System& sys_;
  RkOptions opt_;
  double t_;
  S y_;
  S k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, ynew_, err_;
  double h_ = 0.0;
  double h_last_ = 0.0;
  double facold_ = 1e-4;
  bool last_rejected_ = false;
  long accepted_ = 0;
  long rejected_ = 0;
};

}  // namespace bohm

namespace bohm {

// Adapts a plain callable dy = f(t, y) to the DormandPrince interface.
template <class F>
struct FunctionSystem {
  F f;
  void rhs(double t, const State& y, State& dy) { dy = f(t, y); }
  double step_cap(double, const State&, const State&) const {
    return std::numeric_limits<double>::infinity();
  }
  Vec position(const State& y) const { return y.head(std::min<Eigen::Index>(y.size(), kMaxDim)); }
};

template <class F>
FunctionSystem<F> make_system(F f) {
  return FunctionSystem<F>{std::move(f)};
}

}  // namespace bohm
