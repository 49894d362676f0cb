#include "gapflight/perception.hpp"

#include <algorithm>
#include <cmath>

namespace gapflight {

namespace {
constexpr double kBearingEps = 1e-9;
constexpr double kAlignedSnap = 1e-13;  // cosines this close to 1 read as 0

double grid_value(double lo, double hi, int i, int count) {
  if (count <= 1) return 0.5 * (lo + hi);
  return lo + (hi - lo) * static_cast<double>(i) /
                  static_cast<double>(count - 1);
}
}  // namespace

void SamplingConfig::validate() const {
  for (int axis = 0; axis < 3; ++axis) {
    if (!(box_lo[axis] <= box_hi[axis])) {
      throw InvalidParams("sampling box interval is empty");
    }
    if (position_counts[axis] < 1) {
      throw InvalidParams("sampling counts must be >= 1");
    }
  }
  if (!(time_lo <= time_hi) || time_lo <= 0.0 || time_count < 1) {
    throw InvalidParams("invalid execution-time sampling");
  }
  if (!(theta_norm > 0.0) || !(dist_norm > 0.0)) {
    throw InvalidParams("cost normalizers must be positive");
  }
}

Vec3 ideal_optical_axis(const Vec3& camera_pos, const Vec3& body_z,
                        const Vec3& target, double k) {
  const Vec3 d = target - camera_pos;
  const Vec3 d_perp = d - d.dot(body_z) * body_z;
  const double perp_norm = d_perp.norm();
  if (perp_norm < kBearingEps) {
    throw DegenerateBearing("target lies along the body z-axis");
  }
  return std::sqrt(std::max(0.0, 1.0 - k * k)) * d_perp / perp_norm +
         k * body_z;
}

double min_view_angle(const Vec3& camera_pos, const Vec3& body_z,
                      const Vec3& target, double k) {
  const Vec3 d = target - camera_pos;
  const double d_norm = d.norm();
  const Vec3 d_perp = d - d.dot(body_z) * body_z;
  const double perp_norm = d_perp.norm();
  if (perp_norm < kBearingEps || d_norm < kBearingEps) {
    throw DegenerateBearing("target lies along the body z-axis");
  }
  const double cosine =
      (std::sqrt(std::max(0.0, 1.0 - k * k)) * perp_norm +
       k * d.dot(body_z)) / d_norm;
  if (cosine >= 1.0 - kAlignedSnap) return 0.0;
  if (cosine <= -1.0 + kAlignedSnap) return M_PI;
  return std::acos(cosine);
}

double yaw_from_axis(const Vec3& optical_axis) {
  if (std::hypot(optical_axis.x(), optical_axis.y()) < kBearingEps) {
    throw DegenerateHeading("optical axis has no horizontal component");
  }
  return std::atan2(optical_axis.y(), optical_axis.x());
}

double unwrap_yaw(double yaw, double reference) {
  while (yaw - reference > M_PI) yaw -= 2.0 * M_PI;
  while (yaw - reference < -M_PI) yaw += 2.0 * M_PI;
  return yaw;
}

std::optional<Vec3> thrust_axis(const Vec3& accel, const Vec3& gravity) {
  const Vec3 f = accel - gravity;
  const double n = f.norm();
  if (n < 1e-9) return std::nullopt;
  return Vec3(f / n);
}

CostBreakdown candidate_cost(const MotionPrimitive& prim, const GapSpec& gap,
                             const CameraMount& mount,
                             const SamplingConfig& cfg, const Vec3& gravity,
                             int n_samples) {
  if (n_samples < 2) throw InvalidParams("candidate cost needs >= 2 samples");

  CostBreakdown out;
  out.total_samples = n_samples;
  double sum_sq = 0.0;
  int included = 0;
  for (int i = 0; i < n_samples; ++i) {
    const double t = prim.duration * static_cast<double>(i) /
                     static_cast<double>(n_samples - 1);
    const PrimitiveSample s = sample_primitive(prim, t);
    const auto z_b = thrust_axis(s.a, gravity);
    if (!z_b) {
      ++out.excluded_samples;
      continue;
    }
    try {
      const double theta = min_view_angle(s.p, *z_b, gap.center, mount.k);
      sum_sq += theta * theta;
      ++included;
    } catch (const DegenerateBearing&) {
      ++out.excluded_samples;
    }
  }
  if (out.excluded_samples * 10 > n_samples) {
    throw DegenerateBearing("more than 10% of view samples degenerate");
  }
  out.theta_rms = included > 0 ? std::sqrt(sum_sq / included) : 0.0;
  out.start_distance = (prim.start.p - gap.center).norm();
  out.cost = out.theta_rms / cfg.theta_norm +
             out.start_distance / cfg.dist_norm;
  return out;
}

std::vector<double> build_yaw_profile(const MotionPrimitive& prim,
                                      const GapSpec& gap,
                                      const CameraMount& mount,
                                      const Vec3& gravity, int n_samples) {
  std::vector<double> yaws;
  yaws.reserve(n_samples);
  double prev = 0.0;
  bool have_prev = false;
  for (int i = 0; i < n_samples; ++i) {
    const double t = prim.duration * static_cast<double>(i) /
                     static_cast<double>(std::max(1, n_samples - 1));
    const PrimitiveSample s = sample_primitive(prim, t);
    double yaw = have_prev ? prev : 0.0;
    const auto z_b = thrust_axis(s.a, gravity);
    if (z_b) {
      try {
        const Vec3 axis = ideal_optical_axis(s.p, *z_b, gap.center, mount.k);
        yaw = yaw_from_axis(axis);
        if (have_prev) yaw = unwrap_yaw(yaw, prev);
      } catch (const PlanningError&) {
        // keep previous yaw
      }
    }
    yaws.push_back(yaw);
    prev = yaw;
    have_prev = true;
  }
  return yaws;
}

CandidateTrajectory plan_approach(const SamplingConfig& cfg,
                                  const TraverseTrajectory& traverse,
                                  const GapSpec& gap, const CameraMount& mount,
                                  const InputLimits& limits,
                                  const Vec3& gravity, int cost_samples,
                                  double dt_check) {
  cfg.validate();
  mount.validate();

  const FlatState goal{traverse.start_position, traverse.start_velocity,
                       traverse.accel};

  bool found = false;
  double best_cost = std::numeric_limits<double>::infinity();
  CandidateTrajectory best;

  for (int ix = 0; ix < cfg.position_counts[0]; ++ix) {
    for (int iy = 0; iy < cfg.position_counts[1]; ++iy) {
      for (int iz = 0; iz < cfg.position_counts[2]; ++iz) {
        FlatState start;
        start.p =
            Vec3(grid_value(cfg.box_lo.x(), cfg.box_hi.x(), ix,
                            cfg.position_counts[0]),
                 grid_value(cfg.box_lo.y(), cfg.box_hi.y(), iy,
                            cfg.position_counts[1]),
                 grid_value(cfg.box_lo.z(), cfg.box_hi.z(), iz,
                            cfg.position_counts[2]));
        for (int it = 0; it < cfg.time_count; ++it) {
          const double T =
              grid_value(cfg.time_lo, cfg.time_hi, it, cfg.time_count);
          const MotionPrimitive prim = min_jerk_primitive(start, goal, T);
          const FeasibilityVerdict verdict =
              check_feasibility(prim, limits, gravity, dt_check);
          if (!verdict.feasible()) continue;
          CostBreakdown cost;
          try {
            cost = candidate_cost(prim, gap, mount, cfg, gravity,
                                  cost_samples);
          } catch (const DegenerateBearing&) {
            continue;
          }
          if (cost.cost < best_cost) {
            best_cost = cost.cost;
            best.primitive = prim;
            best.theta_rms = cost.theta_rms;
            best.start_distance = cost.start_distance;
            best.cost = cost.cost;
            best.feasibility = verdict;
            found = true;
          }
        }
      }
    }
  }
  if (!found) {
    throw NoFeasibleCandidate("every sampled candidate was discarded");
  }
  best.yaw_profile =
      build_yaw_profile(best.primitive, gap, mount, gravity, cost_samples);
  return best;
}

ReplanResult replan(const FlatState& current,
                    const TraverseTrajectory& traverse, double t_remaining,
                    const InputLimits& limits, const Vec3& gravity,
                    double dt_check) {
  if (!(t_remaining > 0.0)) {
    throw InvalidParams("replan needs positive remaining time");
  }
  const FlatState goal{traverse.start_position, traverse.start_velocity,
                       traverse.accel};
  MotionPrimitive prim = min_jerk_primitive(current, goal, t_remaining);
  ReplanResult result;
  result.verdict = check_feasibility(prim, limits, gravity, dt_check);
  if (result.verdict.feasible()) {
    result.primitive = std::move(prim);
  }
  return result;
}

}  // namespace gapflight
