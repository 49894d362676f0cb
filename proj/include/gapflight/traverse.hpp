#pragma once

#include <utility>

#include "gapflight/geometry.hpp"

namespace gapflight {

/// Parameters of the traverse: in-plane distances from the start point to
/// the gap center along axis1 (gamma) and axis2 (d), plus the limits used
/// when constructing or optimizing it.
struct TraverseParams {
  double gamma = 0.2;        // m, along axis1; 0 in the straight branch
  double d = 0.3;            // m, along axis2
  double v0_max = 3.0;       // m/s, start-speed bound
  double d_min = 0.25;       // m, lower bound on d
  double v_nominal = 1.5;    // m/s, straight-branch cruise speed
};

/// Ballistic segment through the gap center under constant in-plane
/// gravity and constant thrust normal to the plane.
struct TraverseTrajectory {
  Vec3 start_position = Vec3::Zero();
  Vec3 start_velocity = Vec3::Zero();
  Vec3 accel = Vec3::Zero();       // in-plane gravity, constant
  double t_center = 0.0;           // s, time to reach the gap center
  double t_end = 0.0;              // s, symmetric exit along axis2
  double thrust_mag = 0.0;         // m/s^2, |<g, axis3>| compensation
  Vec3 thrust_dir = Vec3::UnitZ(); // unit, world frame
  PlaneBasis basis;
  Vec3 gap_center = Vec3::Zero();
};

/// Position/velocity/acceleration sample of a traverse.
struct TraverseSample {
  Vec3 p, v, a;
};

/// Builds the closed-form traverse for the given parameters.
///
/// Ballistic branch (gravity decelerates axis1 motion): the start state is
/// placed so the trajectory peaks exactly at the gap center. Straight
/// branch (no axis1 gravity): motion along axis2 only, with gamma = 0 and
/// start speed min(v0_max, v_nominal); a residual axis2 gravity component
/// is integrated as-is.
///
/// Throws InvalidParams on gamma <= 0 in the ballistic branch, d < d_min,
/// a start speed above v0_max, or an exit that never reaches distance d
/// past the gap.
TraverseTrajectory traverse_closed_form(const GapSpec& gap,
                                        const PlaneBasis& basis,
                                        const TraverseParams& params,
                                        const Vec3& gravity);

/// Evaluates the traverse at t in [0, t_end]. Throws OutOfRange otherwise.
TraverseSample evaluate_traverse(const TraverseTrajectory& traj, double t);

/// Box limits for the traverse parameter search.
struct TraverseSearchBox {
  double gamma_max = 2.0;  // m
  double d_max = 2.0;      // m
};

/// Minimizes the time to the gap center over (gamma, d) subject to the
/// start-speed bound and d >= d_min.
///
/// The center time grows with gamma and is independent of d, so the
/// optimum is the smallest gamma that still admits a feasible start speed;
/// for each gamma the best d has a closed form. A coarse scan brackets the
/// feasibility boundary and bisection refines it. Straight-branch gaps
/// (no axis1 gravity) return gamma = 0 with d = d_min directly.
///
/// Throws Infeasible if no point in the box satisfies the constraints.
std::pair<TraverseParams, TraverseTrajectory> optimize_traverse(
    const GapSpec& gap, const PlaneBasis& basis, double v0_max, double d_min,
    const Vec3& gravity, const TraverseSearchBox& box = {},
    double v_nominal = 1.5);

}  // namespace gapflight
