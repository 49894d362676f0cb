#pragma once

#include "gapflight/geometry.hpp"

namespace gapflight {

/// Position and its first two derivatives; the flat outputs tracked by the
/// planner (yaw is handled separately).
struct FlatState {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 a = Vec3::Zero();

  bool finite() const {
    return p.allFinite() && v.allFinite() && a.allFinite();
  }
};

/// Per-axis quintic in monomial basis; row = axis, column = power of t.
struct MotionPrimitive {
  Eigen::Matrix<double, 3, 6> coeffs = Eigen::Matrix<double, 3, 6>::Zero();
  double duration = 0.0;
  FlatState start, end;
};

/// Sampled flat state with jerk.
struct PrimitiveSample {
  Vec3 p, v, a, j;
};

/// Mass-normalized actuator envelope.
struct InputLimits {
  double f_min = 1.0;      // m/s^2, min collective thrust
  double f_max = 20.0;     // m/s^2
  double omega_max = 7.0;  // rad/s

  void validate() const {
    if (!(0.0 <= f_min && f_min < f_max && omega_max > 0.0)) {
      throw InvalidParams("invalid input limits");
    }
  }
};

enum class Feasibility {
  kFeasible,
  kInfeasibleThrust,
  kInfeasibleRate,
  kIndeterminate,
};

struct FeasibilityVerdict {
  Feasibility kind = Feasibility::kIndeterminate;
  double time = 0.0;  // offending sample time for the infeasible kinds

  bool feasible() const { return kind == Feasibility::kFeasible; }
  bool infeasible() const {
    return kind == Feasibility::kInfeasibleThrust ||
           kind == Feasibility::kInfeasibleRate;
  }
};

/// Unique per-axis quintic minimizing the integral of squared jerk between
/// the two full boundary states over duration T. Closed form, no solve.
/// Throws InvalidDuration on T <= 0, InvalidParams on non-finite states.
MotionPrimitive min_jerk_primitive(const FlatState& s0, const FlatState& s1,
                                   double duration);

/// Polynomial evaluation at t in [0, duration]. Throws OutOfRange.
PrimitiveSample sample_primitive(const MotionPrimitive& prim, double t);

/// Integral of the squared jerk norm over the primitive (closed form).
double jerk_cost(const MotionPrimitive& prim);

/// Certified grid check of thrust f(t) = |a(t) - g| in [f_min, f_max] and
/// of the body-rate proxy |j_perp(t)| / f(t) <= omega_max.
///
/// Samples every dt_check seconds and brackets the behaviour between
/// samples with Lipschitz bounds from the jerk/snap extrema: a verdict of
/// Feasible or Infeasible* is certified, anything the bounds cannot decide
/// (including any primitive shorter than 5 * dt_check) comes back
/// Indeterminate.
FeasibilityVerdict check_feasibility(const MotionPrimitive& prim,
                                     const InputLimits& limits,
                                     const Vec3& gravity,
                                     double dt_check = 0.002);

}  // namespace gapflight
