#include "gapflight/traverse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gapflight {

namespace {

constexpr double kGravityEps = 1e-6;  // m/s^2, ballistic-branch threshold

// Smallest root of a*t^2 + b*t + c = 0 strictly above t_min, or NaN.
double smallest_root_above(double a, double b, double c, double t_min) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (std::abs(a) < 1e-12) {
    if (std::abs(b) < 1e-12) return nan;
    const double t = -c / b;
    return t > t_min ? t : nan;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return nan;
  const double sq = std::sqrt(disc);
  // Citardauq form keeps the small root accurate.
  const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
  double r1 = q / a;
  double r2 = (std::abs(q) > 1e-300) ? c / q : nan;
  if (!(r1 <= r2)) std::swap(r1, r2);
  if (r1 > t_min) return r1;
  if (r2 > t_min) return r2;
  return nan;
}

struct InPlaneSolution {
  double t_center;
  double v1;  // start velocity along axis1
  double v2;  // start velocity along axis2
};

// Ballistic branch: peak of the axis1 parabola at the gap center.
InPlaneSolution ballistic_solution(double gamma, double d, double g1,
                                   double g2) {
  InPlaneSolution s{};
  s.t_center = std::sqrt(-2.0 * gamma / g1);
  s.v1 = gamma / s.t_center - 0.5 * g1 * s.t_center;
  s.v2 = d / s.t_center - 0.5 * g2 * s.t_center;
  return s;
}

}  // namespace

TraverseTrajectory traverse_closed_form(const GapSpec& gap,
                                        const PlaneBasis& basis,
                                        const TraverseParams& params,
                                        const Vec3& gravity) {
  const InPlaneGravity gp = gravity_in_plane(basis, gravity);
  if (params.d < params.d_min) {
    throw InvalidParams("traverse distance d below d_min");
  }
  if (params.d_min <= 0.0) {
    throw InvalidParams("d_min must be positive");
  }

  InPlaneSolution sol{};
  double gamma = params.gamma;
  const bool ballistic = gp.along1 < -kGravityEps;
  if (ballistic) {
    if (gamma <= 0.0) {
      throw InvalidParams("ballistic traverse requires gamma > 0");
    }
    sol = ballistic_solution(gamma, params.d, gp.along1, gp.along2);
  } else {
    if (gamma > 1e-9) {
      throw InvalidParams("straight traverse requires gamma = 0");
    }
    gamma = 0.0;
    sol.v1 = 0.0;
    sol.v2 = std::min(params.v0_max, params.v_nominal);
    if (sol.v2 <= 0.0) throw InvalidParams("nonpositive traverse speed");
    // -d + v2*t + 0.5*g2*t^2 = 0
    sol.t_center =
        smallest_root_above(0.5 * gp.along2, sol.v2, -params.d, 0.0);
    if (!std::isfinite(sol.t_center)) {
      throw InvalidParams("traverse cannot reach the gap center");
    }
  }

  // Speed crossing the plane must be positive or the trajectory would cut
  // the gap plane twice.
  const double v2_at_center = sol.v2 + gp.along2 * sol.t_center;
  if (v2_at_center <= 0.0) {
    throw InvalidParams("approach side inconsistent with in-plane gravity");
  }

  TraverseTrajectory traj;
  traj.basis = basis;
  traj.gap_center = gap.center;
  traj.accel = gp.vec;
  traj.start_position =
      gap.center - gamma * basis.axis1 - params.d * basis.axis2;
  traj.start_velocity = sol.v1 * basis.axis1 + sol.v2 * basis.axis2;
  traj.t_center = sol.t_center;

  if (traj.start_velocity.norm() > params.v0_max + 1e-9) {
    throw InvalidParams("traverse start speed exceeds v0_max");
  }

  // Exit when the axis2 displacement past the center equals d again:
  // 0.5*g2*t^2 + v2*t - 2 d = 0, smallest root beyond t_center.
  traj.t_end = smallest_root_above(0.5 * gp.along2, sol.v2, -2.0 * params.d,
                                   traj.t_center);
  if (!std::isfinite(traj.t_end)) {
    throw InvalidParams("traverse never reaches the exit distance");
  }

  const double g3 = gravity.dot(basis.axis3);
  traj.thrust_mag = std::abs(g3);
  traj.thrust_dir = traj.thrust_mag > 1e-9
                        ? Vec3(-(g3 > 0 ? 1.0 : -1.0) * basis.axis3)
                        : Vec3(0.0, 0.0, 1.0);
  return traj;
}

TraverseSample evaluate_traverse(const TraverseTrajectory& traj, double t) {
  if (t < -1e-12 || t > traj.t_end + 1e-12) {
    throw OutOfRange("traverse evaluated outside [0, t_end]");
  }
  TraverseSample s;
  s.p = traj.start_position + traj.start_velocity * t + 0.5 * traj.accel * t * t;
  s.v = traj.start_velocity + traj.accel * t;
  s.a = traj.accel;
  return s;
}

std::pair<TraverseParams, TraverseTrajectory> optimize_traverse(
    const GapSpec& gap, const PlaneBasis& basis, double v0_max, double d_min,
    const Vec3& gravity, const TraverseSearchBox& box, double v_nominal) {
  if (v0_max <= 0.0 || d_min <= 0.0) {
    throw InvalidParams("v0_max and d_min must be positive");
  }
  const InPlaneGravity gp = gravity_in_plane(basis, gravity);

  TraverseParams params;
  params.v0_max = v0_max;
  params.d_min = d_min;
  params.v_nominal = v_nominal;

  if (gp.along1 >= -kGravityEps) {
    // Straight branch: t_center grows with d, so d_min is optimal.
    params.gamma = 0.0;
    params.d = d_min;
    return {params, traverse_closed_form(gap, basis, params, gravity)};
  }

  const double g1 = gp.along1;
  const double g2 = gp.along2;
  if (d_min > box.d_max) throw Infeasible("d_min exceeds the search box");

  // For fixed gamma the best d minimizes |v2|; closed form with clamping.
  const auto best_d = [&](double gamma) {
    const double tc = std::sqrt(-2.0 * gamma / g1);
    return std::clamp(0.5 * g2 * tc * tc, d_min, box.d_max);
  };
  const auto start_speed = [&](double gamma) {
    const InPlaneSolution s =
        ballistic_solution(gamma, best_d(gamma), g1, g2);
    return std::hypot(s.v1, s.v2);
  };
  const auto feasible = [&](double gamma) {
    return start_speed(gamma) <= v0_max;
  };

  // t_center is monotone in gamma and independent of d, so the optimum is
  // the smallest feasible gamma. Log-spaced scan, then boundary bisection.
  constexpr int kScanPoints = 4096;
  const double lo_scan = 1e-9;
  const double ratio = std::pow(box.gamma_max / lo_scan,
                                1.0 / static_cast<double>(kScanPoints - 1));
  double gamma_feasible = std::numeric_limits<double>::quiet_NaN();
  double gamma_infeasible = std::numeric_limits<double>::quiet_NaN();
  double g = lo_scan;
  for (int i = 0; i < kScanPoints; ++i, g *= ratio) {
    const double gamma = std::min(g, box.gamma_max);
    if (feasible(gamma)) {
      gamma_feasible = gamma;
      break;
    }
    gamma_infeasible = gamma;
  }
  if (!std::isfinite(gamma_feasible)) {
    throw Infeasible("no traverse parameters satisfy the speed bound");
  }

  if (std::isfinite(gamma_infeasible)) {
    double lo = gamma_infeasible, hi = gamma_feasible;
    for (int it = 0; it < 120 && (hi - lo) > 1e-14 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (feasible(mid) ? hi : lo) = mid;
    }
    gamma_feasible = hi;
  }

  params.gamma = gamma_feasible;
  params.d = best_d(gamma_feasible);
  return {params, traverse_closed_form(gap, basis, params, gravity)};
}

}  // namespace gapflight
