#include "gapflight/simulator.hpp"

#include <algorithm>
#include <cmath>

namespace gapflight {

namespace {

Mat3 renormalized(Mat3 R) {
  R.col(0).normalize();
  R.col(1) = (R.col(1) - R.col(1).dot(R.col(0)) * R.col(0)).normalized();
  R.col(2) = R.col(0).cross(R.col(1));
  return R;
}

struct StepResult {
  QuadState state;
  Vec3 gyro_avg;    // effective body rate over the step
  Vec3 accel_body;  // specific force in the body frame (noise-free)
};

StepResult step_full(const QuadState& s, const Command& cmd, double dt,
                     double tau, const Vec3& gravity) {
  StepResult out;
  const double decay = std::exp(-dt / tau);
  const Vec3 rate_next = cmd.body_rates + (s.body_rates - cmd.body_rates) * decay;
  // average of the exact first-order response over the step
  out.gyro_avg = cmd.body_rates +
                 (s.body_rates - cmd.body_rates) * (tau / dt) * (1.0 - decay);

  const Vec3 accel_world =
      s.attitude * Vec3(0.0, 0.0, cmd.thrust) + gravity;
  out.accel_body = Vec3(0.0, 0.0, cmd.thrust);

  out.state.position = s.position + s.velocity * dt + 0.5 * accel_world * dt * dt;
  out.state.velocity = s.velocity + accel_world * dt;
  out.state.attitude = renormalized(s.attitude * so3_exp(out.gyro_avg * dt));
  out.state.body_rates = rate_next;
  return out;
}

double recovered_gap_roll(const Mat3& orientation) {
  // R = Rx(roll) * Ry(pitch) * base with base columns (y, z, x)
  Mat3 base;
  base.col(0) = Vec3::UnitY();
  base.col(1) = Vec3::UnitZ();
  base.col(2) = Vec3::UnitX();
  const Mat3 rp = orientation * base.transpose();
  return std::atan2(rp(2, 1), rp(1, 1));
}

double recovered_gap_pitch(const Mat3& orientation) {
  Mat3 base;
  base.col(0) = Vec3::UnitY();
  base.col(1) = Vec3::UnitZ();
  base.col(2) = Vec3::UnitX();
  const Mat3 rp = orientation * base.transpose();
  return std::atan2(rp(0, 2), rp(0, 0));
}

}  // namespace

QuadState step_dynamics(const QuadState& state, const Command& cmd, double dt,
                        double attitude_tau, const Vec3& gravity) {
  if (!(dt > 0.0) || dt > 2e-3 + 1e-12) {
    throw InvalidParams("dynamics step must be in (0, 2 ms]");
  }
  return step_full(state, cmd, dt, attitude_tau, gravity).state;
}

Mat3 attitude_from_thrust_yaw(const Vec3& z_des, double yaw) {
  Vec3 x_c(std::cos(yaw), std::sin(yaw), 0.0);
  Vec3 y = z_des.cross(x_c);
  if (y.norm() < 1e-6) {
    x_c = Vec3(-std::sin(yaw), std::cos(yaw), 0.0);
    y = z_des.cross(x_c);
  }
  y.normalize();
  Mat3 R;
  R.col(0) = y.cross(z_des);
  R.col(1) = y;
  R.col(2) = z_des;
  return R;
}

Command track(const TrackingReference& ref, const Vec3& est_position,
              const Vec3& est_velocity, const Mat3& est_attitude,
              const InputLimits& limits, const Vec3& gravity,
              const ControllerGains& gains) {
  const Vec3 a_des = ref.state.a + gains.kp * (ref.state.p - est_position) +
                     gains.kv * (ref.state.v - est_velocity);
  const Vec3 f_vec = a_des - gravity;
  const double f_norm = f_vec.norm();
  const Vec3 body_z = est_attitude.col(2);
  Vec3 z_des = f_norm > 1e-6 ? Vec3(f_vec / f_norm) : body_z;

  Command cmd;
  cmd.thrust = std::clamp(f_vec.dot(body_z), limits.f_min, limits.f_max);

  const Mat3 R_des = attitude_from_thrust_yaw(z_des, ref.yaw);
  const Vec3 att_err = so3_log(est_attitude.transpose() * R_des);

  const Vec3 j_perp = ref.jerk - ref.jerk.dot(z_des) * z_des;
  const Vec3 rate_ff =
      est_attitude.transpose() * (z_des.cross(j_perp) / std::max(f_norm, 1.0));

  cmd.body_rates = gains.k_att * att_err + rate_ff;
  const double rate_norm = cmd.body_rates.norm();
  if (rate_norm > limits.omega_max) {
    cmd.body_rates *= limits.omega_max / rate_norm;
  }
  return cmd;
}

SamplingConfig resolve_sampling(const SamplingSpec& spec, const GapSpec& gap,
                                const PlaneBasis& basis) {
  SamplingConfig cfg;
  const Vec3 center = gap.center - spec.back_offset * basis.axis2;
  cfg.box_lo = center - spec.half_extents;
  cfg.box_hi = center + spec.half_extents;
  cfg.time_lo = spec.time_lo;
  cfg.time_hi = spec.time_hi;
  cfg.position_counts = spec.position_counts;
  cfg.time_count = spec.time_count;
  cfg.theta_norm = spec.theta_norm;
  cfg.dist_norm = spec.dist_norm;
  return cfg;
}

void TrialConfig::validate() const {
  gap.validate();
  vehicle.validate();
  mount.validate();
  sensor.validate();
  if (!(gap.width - vehicle.tip_to_tip > 0.0) ||
      !(gap.height - vehicle.body_height > 0.0)) {
    throw InvalidParams("vehicle does not fit through the gap");
  }
  const double gnorm = world.gravity.norm();
  if (!allow_nonstandard_gravity && (gnorm < 9.5 || gnorm > 10.0)) {
    throw InvalidParams("gravity magnitude outside [9.5, 10] m/s^2");
  }
  if (!(control_rate_hz > 0.0) || sim_rate_hz < control_rate_hz) {
    throw InvalidParams("sim rate must be >= control rate");
  }
  const double ratio = sim_rate_hz / control_rate_hz;
  if (std::abs(ratio - std::round(ratio)) > 1e-9) {
    throw InvalidParams("sim rate must be an integer multiple of control rate");
  }
  if (1.0 / sim_rate_hz > 2e-3 + 1e-12) {
    throw InvalidParams("sim step must be at most 2 ms");
  }
  if (!(v0_max > 0.0) || !(d_min > 0.0) || !(v_nominal > 0.0)) {
    throw InvalidParams("invalid traverse limits");
  }
  if (blackout_tail_s < 0.0 || !(terminal_speed_limit > 0.0)) {
    throw InvalidParams("invalid trial options");
  }
}

double crossing_clearance(const Vec3& crossing_pos, const GapSpec& gap,
                          const VehicleSpec& vehicle) {
  const Vec3 offset = crossing_pos - gap.center;
  const double along_long = std::abs(offset.dot(gap.long_axis()));
  const double along_short = std::abs(offset.dot(gap.short_axis()));
  const double margin_long = 0.5 * (gap.width - vehicle.tip_to_tip);
  const double margin_short = 0.5 * (gap.height - vehicle.body_height);
  return std::min(margin_long - along_long, margin_short - along_short);
}

TrialReport run_trial(const TrialConfig& cfg) {
  cfg.validate();

  TrialReport report;
  report.seed = cfg.seed;
  report.gap_roll = recovered_gap_roll(cfg.gap.orientation);
  report.gap_pitch = recovered_gap_pitch(cfg.gap.orientation);

  const Vec3 g = cfg.world.gravity;
  const PlaneBasis basis = plane_basis(cfg.gap, g, cfg.approach_side);

  TraverseTrajectory traverse;
  CandidateTrajectory candidate;
  try {
    auto planned = optimize_traverse(cfg.gap, basis, cfg.v0_max, cfg.d_min, g,
                                     cfg.search_box, cfg.v_nominal);
    traverse = planned.second;
    const SamplingConfig samp = resolve_sampling(cfg.sampling, cfg.gap, basis);
    candidate = plan_approach(samp, traverse, cfg.gap, cfg.mount,
                              cfg.vehicle.limits, g, cfg.sampling.cost_samples);
  } catch (const PlanningError& e) {
    report.planning_failed = true;
    report.failure_reason = e.what();
    return report;
  }

  const double dt = 1.0 / cfg.sim_rate_hz;
  const double dt_ctrl = 1.0 / cfg.control_rate_hz;
  const int steps_per_ctrl =
      static_cast<int>(std::round(cfg.sim_rate_hz / cfg.control_rate_hz));
  const int n_approach = std::max(
      1, static_cast<int>(std::round(candidate.primitive.duration / dt)));
  const int n_traverse =
      static_cast<int>(std::ceil(traverse.t_end / dt - 1e-9));
  const int n_total = n_approach + n_traverse;
  const double t_switch = n_approach * dt;

  report.t_start_traverse = t_switch;
  report.t_center = traverse.t_center;
  report.t_end = traverse.t_end;

  // Truth starts hovering at the selected candidate start, camera on gap.
  QuadState truth;
  truth.position = candidate.primitive.start.p;
  double yaw = 0.0;
  try {
    yaw = yaw_from_axis(
        ideal_optical_axis(truth.position, Vec3::UnitZ(), cfg.gap.center,
                           cfg.mount.k));
  } catch (const PlanningError&) {
  }
  truth.attitude = rot_z(yaw);

  Rng rng(cfg.seed);
  const Vec3 accel_bias = cfg.imu.accel_bias_std * rng.gaussian3();
  const Vec3 gyro_bias = cfg.imu.gyro_bias_std * rng.gaussian3();

  const auto blackout = [&](double t) {
    return cfg.blackout_tail_s > 0.0 && t >= t_switch - cfg.blackout_tail_s;
  };
  const auto visible = [&](double t) {
    return !blackout(t) &&
           gap_visible(truth.position, truth.attitude, cfg.gap, cfg.mount,
                       truth.body_rates.norm(), cfg.sensor);
  };
  const auto take_measurement = [&]() {
    RelativePose rel;
    rel.rotation = truth.attitude.transpose() * cfg.gap.orientation;
    rel.translation =
        truth.attitude.transpose() * (cfg.gap.center - truth.position);
    const double dist = (cfg.gap.center - truth.position).norm();
    return vehicle_pose_from_measurement(
        measure_gap_pose(rel, dist, cfg.sensor, rng), cfg.gap);
  };

  // Initial estimate from the first detection when available; otherwise
  // anchor on the commanded hover point.
  StateEstimate est;
  est.velocity = Vec3::Zero();
  if (visible(0.0)) {
    const PoseMeasurement pm = take_measurement();
    est.position = pm.position;
    est.attitude = pm.rotation;
    const double vp = std::max(pm.sigma_pos * pm.sigma_pos, 1e-12);
    const double vr = std::max(pm.sigma_rot * pm.sigma_rot, 1e-12);
    est.covariance.setZero();
    est.covariance.block<3, 3>(0, 0) = vp * Mat3::Identity();
    est.covariance.block<3, 3>(3, 3) = 1e-4 * Mat3::Identity();
    est.covariance.block<3, 3>(6, 6) = vr * Mat3::Identity();
  } else {
    est.position = truth.position;
    est.attitude = truth.attitude;
    est.covariance.setZero();
    est.covariance.block<3, 3>(0, 0) = 1e-2 * Mat3::Identity();
    est.covariance.block<3, 3>(3, 3) = 1e-2 * Mat3::Identity();
    est.covariance.block<3, 3>(6, 6) = 1e-2 * Mat3::Identity();
  }

  MotionPrimitive active_prim = candidate.primitive;
  double anchor_t = 0.0;
  double yaw_ref = yaw;
  TrackingReference ref;
  ref.state = candidate.primitive.start;
  ref.yaw = yaw_ref;
  Command cmd{};

  const Command traverse_cmd{traverse.thrust_mag, Vec3::Zero()};
  double next_meas_t = 0.0;
  const double meas_period = 1.0 / cfg.sensor.rate_hz;

  QuadState truth_before_tc, truth_after_tc;
  const double t_center_abs = t_switch + traverse.t_center;
  const int idx_tc =
      std::min(n_total - 1, static_cast<int>(std::floor(t_center_abs / dt)));

  double prev_side = -1.0;
  Vec3 prev_pos = truth.position;
  bool crossing_done = false;

  if (cfg.record_series) report.series.reserve(n_total + 1);

  const auto record_row = [&](double t, bool detected, TrialPhase phase) {
    if (!cfg.record_series) return;
    TrialSeriesRow row;
    row.t = t;
    row.p_true = truth.position;
    row.v_true = truth.velocity;
    row.rpy_true = rpy_from_rotation(truth.attitude);
    row.p_est = est.position;
    row.v_est = est.velocity;
    row.rpy_est = rpy_from_rotation(est.attitude);
    row.p_ref = ref.state.p;
    row.v_ref = ref.state.v;
    row.phase = phase;
    row.detected = detected;
    report.series.push_back(row);
  };

  for (int i = 0; i < n_total; ++i) {
    const double t = i * dt;
    const bool in_approach = i < n_approach;
    const TrialPhase phase =
        in_approach ? TrialPhase::kApproach : TrialPhase::kTraverse;

    if (in_approach) {
      if (i % steps_per_ctrl == 0) {
        // Per-protocol the traverse is refreshed from the latest gap
        // knowledge each control step; with a fixed gap pose this is
        // idempotent but keeps the loop structure honest.
        auto replanned_traverse =
            optimize_traverse(cfg.gap, basis, cfg.v0_max, cfg.d_min, g,
                              cfg.search_box, cfg.v_nominal);
        const double t_rem = t_switch - t;
        const double tau_prev =
            std::clamp(t - anchor_t, 0.0, active_prim.duration);
        const Vec3 a_anchor = sample_primitive(active_prim, tau_prev).a;
        if (t_rem > 0.0) {
          const ReplanResult res =
              replan(FlatState{est.position, est.velocity, a_anchor},
                     replanned_traverse.second, t_rem, cfg.vehicle.limits, g);
          if (res.replanned()) {
            active_prim = *res.primitive;
            anchor_t = t;
            ++report.replan_count;
          }
        }
        const double tau_ref =
            std::clamp(t + dt_ctrl - anchor_t, 0.0, active_prim.duration);
        const PrimitiveSample s = sample_primitive(active_prim, tau_ref);
        ref.state = FlatState{s.p, s.v, s.a};
        ref.jerk = s.j;
        const auto z_b = thrust_axis(s.a, g);
        if (z_b) {
          try {
            yaw_ref = unwrap_yaw(
                yaw_from_axis(
                    ideal_optical_axis(s.p, *z_b, cfg.gap.center, cfg.mount.k)),
                yaw_ref);
          } catch (const PlanningError&) {
          }
        }
        ref.yaw = yaw_ref;
        cmd = track(ref, est.position, est.velocity, est.attitude,
                    cfg.vehicle.limits, g, cfg.gains);
      }
    } else {
      if (i == n_approach) {
        report.entry_pos_error =
            (truth.position - traverse.start_position).norm();
        report.entry_vel_error =
            (truth.velocity - traverse.start_velocity).norm();
        prev_side = (truth.position - cfg.gap.center).dot(basis.axis2);
        prev_pos = truth.position;
      }
      cmd = traverse_cmd;
      const TraverseSample s =
          evaluate_traverse(traverse, std::min(t - t_switch, traverse.t_end));
      ref.state = FlatState{s.p, s.v, s.a};
      ref.jerk = Vec3::Zero();
      ref.yaw = yaw_ref;
    }

    // Detection attempts run on their own clock, regardless of phase.
    bool detected = false;
    std::optional<PoseMeasurement> pending;
    if (t + 1e-12 >= next_meas_t) {
      next_meas_t += meas_period;
      if (visible(t) && rng.uniform01() >= cfg.sensor.p_dropout) {
        pending = take_measurement();
        detected = true;
        ++report.detection_count;
      }
    }

    record_row(t, detected, phase);

    if (i == idx_tc) truth_before_tc = truth;
    const StepResult step =
        step_full(truth, cmd, dt, cfg.vehicle.attitude_tau, g);

    ImuSample imu;
    imu.accel = step.accel_body + accel_bias +
                cfg.imu.accel_std * rng.gaussian3();
    imu.gyro = step.gyro_avg + gyro_bias + cfg.imu.gyro_std * rng.gaussian3();
    est = estimator_step(est, imu, cfg.imu, pending, dt, g);

    truth = step.state;
    if (i == idx_tc) truth_after_tc = truth;

    if (!in_approach && !crossing_done) {
      const double side = (truth.position - cfg.gap.center).dot(basis.axis2);
      if (prev_side < 0.0 && side >= 0.0) {
        const double lambda = prev_side / (prev_side - side);
        const Vec3 crossing = prev_pos + lambda * (truth.position - prev_pos);
        crossing_done = true;
        report.crossed_plane = true;
        report.min_clearance =
            crossing_clearance(crossing, cfg.gap, cfg.vehicle);
        report.collided = report.min_clearance < 0.0;
      }
      prev_side = side;
      prev_pos = truth.position;
    }
  }

  // Final sample at t_end.
  {
    const double t_final = n_total * dt;
    const TraverseSample s = evaluate_traverse(traverse, traverse.t_end);
    ref.state = FlatState{s.p, s.v, s.a};
    ref.jerk = Vec3::Zero();
    record_row(t_final, false, TrialPhase::kTraverse);
  }
  report.sim_steps = static_cast<int>(report.series.size());
  if (!cfg.record_series) report.sim_steps = n_total + 1;

  // Errors against the planned traverse at the center time.
  {
    const double frac = (t_center_abs - idx_tc * dt) / dt;
    const Vec3 p_interp = truth_before_tc.position +
                          frac * (truth_after_tc.position -
                                  truth_before_tc.position);
    const Vec3 v_interp = truth_before_tc.velocity +
                          frac * (truth_after_tc.velocity -
                                  truth_before_tc.velocity);
    const TraverseSample want = evaluate_traverse(traverse, traverse.t_center);
    report.pos_error_tc = p_interp - want.p;
    report.vel_error_tc = v_interp - want.v;

    const Vec3 z_actual = truth_before_tc.attitude.col(2);
    const Vec3 z_want = traverse.thrust_dir;
    const Vec3 cross = z_want.cross(z_actual);
    const double angle =
        std::atan2(cross.norm(), std::clamp(z_want.dot(z_actual), -1.0, 1.0));
    const Vec3 tilt =
        cross.norm() > 1e-12 ? Vec3(angle * cross / cross.norm()) : Vec3::Zero();
    report.roll_error_tc = std::abs(tilt.dot(basis.axis1));
    report.pitch_error_tc = std::abs(tilt.dot(basis.axis2));
  }

  report.terminal_speed = truth.velocity.norm();
  report.success = report.crossed_plane && !report.collided &&
                   report.terminal_speed <= cfg.terminal_speed_limit;
  if (!report.success && report.failure_reason.empty()) {
    if (!report.crossed_plane) {
      report.failure_reason = "never crossed the gap plane";
    } else if (report.collided) {
      report.failure_reason = "hit the gap frame";
    } else {
      report.failure_reason = "terminal speed above limit";
    }
  }
  return report;
}

}  // namespace gapflight
