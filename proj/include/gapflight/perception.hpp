#pragma once

#include <optional>
#include <vector>

#include "gapflight/min_jerk.hpp"
#include "gapflight/traverse.hpp"

namespace gapflight {

/// Fixed camera mount: k is the cosine of the angle between the body
/// z-axis and the optical axis (0 for a forward-facing camera), fov_half
/// the half field of view (pi/2 for a 180-degree lens).
struct CameraMount {
  double k = 0.0;
  double fov_half = 1.5707963267948966;

  /// Optical axis in the body frame, placed in the body x-z plane.
  Vec3 body_axis() const {
    return Vec3(std::sqrt(std::max(0.0, 1.0 - k * k)), 0.0, k);
  }

  void validate() const {
    if (std::abs(k) > 1.0 || !(fov_half > 0.0) ||
        fov_half > 1.5707963267948966 + 1e-9) {
      throw InvalidParams("invalid camera mount");
    }
  }
};

/// Candidate grid: world-frame start-position box, execution-time range,
/// counts per dimension, and the cost normalizers.
struct SamplingConfig {
  Vec3 box_lo = Vec3::Zero();
  Vec3 box_hi = Vec3::Zero();
  double time_lo = 1.5;
  double time_hi = 4.0;
  std::array<int, 3> position_counts = {10, 10, 5};
  int time_count = 8;
  double theta_norm = 0.17453292519943295;  // rad (10 deg)
  double dist_norm = 4.0;                   // m

  void validate() const;
  int total_candidates() const {
    return position_counts[0] * position_counts[1] * position_counts[2] *
           time_count;
  }
};

/// View-angle cost of a candidate.
struct CostBreakdown {
  double theta_rms = 0.0;
  double start_distance = 0.0;
  double cost = 0.0;
  int excluded_samples = 0;
  int total_samples = 0;
};

/// Selected approach: the primitive, its yaw profile, and the cost terms.
struct CandidateTrajectory {
  MotionPrimitive primitive;
  std::vector<double> yaw_profile;
  double theta_rms = 0.0;
  double start_distance = 0.0;
  double cost = 0.0;
  FeasibilityVerdict feasibility;
};

/// Best achievable optical axis: the unit vector on the cone
/// <x, z_b> = k closest in angle to the camera-to-target bearing.
/// Throws DegenerateBearing when the bearing is (near) parallel to z_b.
Vec3 ideal_optical_axis(const Vec3& camera_pos, const Vec3& body_z,
                        const Vec3& target, double k);

/// Smallest angle between the bearing and any optical axis on the mount
/// cone. Exactly zero when the bearing lies on the cone (cosines within
/// 1e-13 of 1 snap to zero). Throws DegenerateBearing as above.
double min_view_angle(const Vec3& camera_pos, const Vec3& body_z,
                      const Vec3& target, double k);

/// Heading of the horizontal projection of an optical axis, in (-pi, pi].
/// Throws DegenerateHeading when the axis is (near) vertical.
double yaw_from_axis(const Vec3& optical_axis);

/// Shifts yaw by multiples of 2*pi to land within pi of reference.
double unwrap_yaw(double yaw, double reference);

/// Thrust direction implied by an acceleration, empty when thrust ~ 0.
std::optional<Vec3> thrust_axis(const Vec3& accel, const Vec3& gravity);

/// RMS view angle over uniform samples of the primitive, start distance,
/// and the combined normalized cost. Degenerate samples are dropped;
/// throws DegenerateBearing when more than 10% are dropped.
CostBreakdown candidate_cost(const MotionPrimitive& prim, const GapSpec& gap,
                             const CameraMount& mount,
                             const SamplingConfig& cfg, const Vec3& gravity,
                             int n_samples);

/// Unwrapped yaw profile pointing the camera at the gap along a primitive.
/// Samples where the bearing or heading degenerates hold the previous yaw.
std::vector<double> build_yaw_profile(const MotionPrimitive& prim,
                                      const GapSpec& gap,
                                      const CameraMount& mount,
                                      const Vec3& gravity, int n_samples);

/// Enumerates the start-position x execution-time grid, keeps candidates
/// whose feasibility verdict is Feasible, and returns the one with the
/// lowest cost. Candidates start at rest and end at the traverse initial
/// state. Ties resolve to the first candidate in grid (x, y, z, T) order.
/// Throws NoFeasibleCandidate when the whole grid is discarded.
CandidateTrajectory plan_approach(const SamplingConfig& cfg,
                                  const TraverseTrajectory& traverse,
                                  const GapSpec& gap, const CameraMount& mount,
                                  const InputLimits& limits,
                                  const Vec3& gravity, int cost_samples = 20,
                                  double dt_check = 0.002);

/// Replan outcome: either a fresh primitive or keep the last one.
struct ReplanResult {
  std::optional<MotionPrimitive> primitive;
  FeasibilityVerdict verdict;

  bool replanned() const { return primitive.has_value(); }
};

/// Builds the primitive from the current state to the traverse initial
/// state over the remaining time. Anything but a Feasible verdict keeps
/// the previous trajectory.
ReplanResult replan(const FlatState& current,
                    const TraverseTrajectory& traverse, double t_remaining,
                    const InputLimits& limits, const Vec3& gravity,
                    double dt_check = 0.002);

}  // namespace gapflight
