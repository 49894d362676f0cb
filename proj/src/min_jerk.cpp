#include "gapflight/min_jerk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gapflight {

MotionPrimitive min_jerk_primitive(const FlatState& s0, const FlatState& s1,
                                   double duration) {
  if (!(duration > 0.0)) {
    throw InvalidDuration("primitive duration must be positive");
  }
  if (!s0.finite() || !s1.finite()) {
    throw InvalidParams("boundary states must be finite");
  }

  MotionPrimitive prim;
  prim.duration = duration;
  prim.start = s0;
  prim.end = s1;

  const double T = duration;
  const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T;
  for (int axis = 0; axis < 3; ++axis) {
    const double dp = s1.p[axis] - s0.p[axis] - s0.v[axis] * T -
                      0.5 * s0.a[axis] * T2;
    const double dv = s1.v[axis] - s0.v[axis] - s0.a[axis] * T;
    const double da = s1.a[axis] - s0.a[axis];

    const double alpha = (720.0 * dp - 360.0 * T * dv + 60.0 * T2 * da) / T5;
    const double beta = (-360.0 * dp + 168.0 * T * dv - 24.0 * T2 * da) / T4;
    const double gamma = (60.0 * dp - 24.0 * T * dv + 3.0 * T2 * da) / T3;

    prim.coeffs(axis, 0) = s0.p[axis];
    prim.coeffs(axis, 1) = s0.v[axis];
    prim.coeffs(axis, 2) = 0.5 * s0.a[axis];
    prim.coeffs(axis, 3) = gamma / 6.0;
    prim.coeffs(axis, 4) = beta / 24.0;
    prim.coeffs(axis, 5) = alpha / 120.0;
  }
  return prim;
}

PrimitiveSample sample_primitive(const MotionPrimitive& prim, double t) {
  if (t < -1e-12 || t > prim.duration + 1e-12) {
    throw OutOfRange("primitive sampled outside [0, T]");
  }
  PrimitiveSample s;
  for (int axis = 0; axis < 3; ++axis) {
    const auto& c = prim.coeffs;
    // Horner for p, v, a, j
    s.p[axis] = ((((c(axis, 5) * t + c(axis, 4)) * t + c(axis, 3)) * t +
                  c(axis, 2)) * t + c(axis, 1)) * t + c(axis, 0);
    s.v[axis] = (((5.0 * c(axis, 5) * t + 4.0 * c(axis, 4)) * t +
                  3.0 * c(axis, 3)) * t + 2.0 * c(axis, 2)) * t + c(axis, 1);
    s.a[axis] = ((20.0 * c(axis, 5) * t + 12.0 * c(axis, 4)) * t +
                 6.0 * c(axis, 3)) * t + 2.0 * c(axis, 2);
    s.j[axis] = (60.0 * c(axis, 5) * t + 24.0 * c(axis, 4)) * t +
                6.0 * c(axis, 3);
  }
  return s;
}

double jerk_cost(const MotionPrimitive& prim) {
  const double T = prim.duration;
  double cost = 0.0;
  for (int axis = 0; axis < 3; ++axis) {
    // jerk(t) = A + B t + C t^2
    const double A = 6.0 * prim.coeffs(axis, 3);
    const double B = 24.0 * prim.coeffs(axis, 4);
    const double C = 60.0 * prim.coeffs(axis, 5);
    cost += A * A * T + A * B * T * T +
            (B * B + 2.0 * A * C) * T * T * T / 3.0 +
            0.5 * B * C * T * T * T * T + C * C * T * T * T * T * T / 5.0;
  }
  return cost;
}

namespace {

// Max |A + B t + C t^2| over [0, T]: endpoints plus interior vertex.
double quadratic_abs_max(double A, double B, double C, double T) {
  double m = std::max(std::abs(A), std::abs(A + B * T + C * T * T));
  if (std::abs(C) > 0.0) {
    const double tv = -B / (2.0 * C);
    if (tv > 0.0 && tv < T) {
      m = std::max(m, std::abs(A + B * tv + C * tv * tv));
    }
  }
  return m;
}

}  // namespace

FeasibilityVerdict check_feasibility(const MotionPrimitive& prim,
                                     const InputLimits& limits,
                                     const Vec3& gravity, double dt_check) {
  if (!(dt_check > 0.0)) {
    throw InvalidParams("dt_check must be positive");
  }
  limits.validate();

  const double T = prim.duration;
  if (T < 5.0 * dt_check) {
    return {Feasibility::kIndeterminate, 0.0};
  }

  // Global jerk and snap norm bounds for the Lipschitz brackets.
  double jmax_sq = 0.0, smax_sq = 0.0;
  for (int axis = 0; axis < 3; ++axis) {
    const double A = 6.0 * prim.coeffs(axis, 3);
    const double B = 24.0 * prim.coeffs(axis, 4);
    const double C = 60.0 * prim.coeffs(axis, 5);
    const double jm = quadratic_abs_max(A, B, C, T);
    jmax_sq += jm * jm;
    const double sm = std::max(std::abs(B), std::abs(B + 2.0 * C * T));
    smax_sq += sm * sm;
  }
  const double jmax = std::sqrt(jmax_sq);
  const double smax = std::sqrt(smax_sq);
  const double lip_f = jmax;
  const double half_gap = 0.5 * dt_check;

  const int n = static_cast<int>(std::ceil(T / dt_check));
  double f_lo_sampled = std::numeric_limits<double>::infinity();
  double f_hi_sampled = 0.0;
  double omega_hi_sampled = 0.0;
  double thrust_excess = 0.0, thrust_time = 0.0;
  double rate_excess = 0.0, rate_time = 0.0;

  for (int i = 0; i <= n; ++i) {
    const double t = std::min(i * dt_check, T);
    const PrimitiveSample s = sample_primitive(prim, t);
    const Vec3 thrust_vec = s.a - gravity;
    const double f = thrust_vec.norm();
    f_lo_sampled = std::min(f_lo_sampled, f);
    f_hi_sampled = std::max(f_hi_sampled, f);

    const double ex = std::max(limits.f_min - f, f - limits.f_max);
    if (ex > thrust_excess) {
      thrust_excess = ex;
      thrust_time = t;
    }
    if (f > 1e-9) {
      const Vec3 dir = thrust_vec / f;
      const Vec3 j_perp = s.j - s.j.dot(dir) * dir;
      const double omega = j_perp.norm() / f;
      if (omega > omega_hi_sampled) omega_hi_sampled = omega;
      if (omega - limits.omega_max > rate_excess) {
        rate_excess = omega - limits.omega_max;
        rate_time = t;
      }
    }
  }

  const double f_floor = std::max(1e-6, f_lo_sampled - lip_f * half_gap);
  const double lip_omega = (smax + 3.0 * jmax * jmax / f_floor) / f_floor;
  const double slack_f = lip_f * half_gap;
  const double slack_omega = lip_omega * half_gap;

  if (thrust_excess > slack_f) {
    return {Feasibility::kInfeasibleThrust, thrust_time};
  }
  if (rate_excess > slack_omega) {
    return {Feasibility::kInfeasibleRate, rate_time};
  }
  if (thrust_excess > 0.0 || rate_excess > 0.0) {
    return {Feasibility::kIndeterminate, 0.0};
  }

  const bool thrust_ok = (f_lo_sampled - limits.f_min) > slack_f &&
                         (limits.f_max - f_hi_sampled) > slack_f;
  const bool rate_ok = (limits.omega_max - omega_hi_sampled) > slack_omega;
  if (thrust_ok && rate_ok) {
    return {Feasibility::kFeasible, 0.0};
  }
  return {Feasibility::kIndeterminate, 0.0};
}

}  // namespace gapflight
