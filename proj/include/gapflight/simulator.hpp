#pragma once

#include <string>
#include <vector>

#include "gapflight/sensor_model.hpp"

namespace gapflight {

/// Rigid-body vehicle state.
struct QuadState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Mat3 attitude = Mat3::Identity();
  Vec3 body_rates = Vec3::Zero();
};

/// Thrust (mass-normalized) along body z plus commanded body rates.
struct Command {
  double thrust = 0.0;
  Vec3 body_rates = Vec3::Zero();
};

struct VehicleSpec {
  double tip_to_tip = 0.55;    // m, largest length between propeller tips
  double body_height = 0.12;   // m
  InputLimits limits;
  double attitude_tau = 0.04;  // s, body-rate loop time constant

  void validate() const {
    if (!(tip_to_tip > 0.0) || !(body_height > 0.0) ||
        !(attitude_tau > 0.0)) {
      throw InvalidParams("invalid vehicle spec");
    }
    limits.validate();
  }
};

/// One integration step: exact first-order body-rate tracking, attitude on
/// the rotation group, constant-acceleration translation update.
QuadState step_dynamics(const QuadState& state, const Command& cmd, double dt,
                        double attitude_tau, const Vec3& gravity);

/// Rotation with body z along z_des and the heading set by yaw.
Mat3 attitude_from_thrust_yaw(const Vec3& z_des, double yaw);

/// Reference point for the tracking controller.
struct TrackingReference {
  FlatState state;
  Vec3 jerk = Vec3::Zero();
  double yaw = 0.0;
};

struct ControllerGains {
  double kp = 10.0;
  double kv = 6.0;
  double k_att = 12.0;
};

/// Flatness-based tracking: PD on position/velocity plus acceleration
/// feedforward gives the desired thrust vector; body rates come from the
/// attitude error and a jerk feedforward. Commands are clamped to limits.
Command track(const TrackingReference& ref, const Vec3& est_position,
              const Vec3& est_velocity, const Mat3& est_attitude,
              const InputLimits& limits, const Vec3& gravity,
              const ControllerGains& gains);

/// Relative placement of the candidate start box, resolved against the gap
/// at trial time.
struct SamplingSpec {
  double back_offset = 3.5;                  // m along -axis2
  Vec3 half_extents = Vec3(1.0, 1.0, 0.5);   // m, world-aligned box
  double time_lo = 1.5, time_hi = 4.0;       // s
  std::array<int, 3> position_counts = {10, 10, 5};
  int time_count = 8;
  double theta_norm = 0.17453292519943295;   // rad
  double dist_norm = 4.0;                    // m
  int cost_samples = 20;
};

SamplingConfig resolve_sampling(const SamplingSpec& spec, const GapSpec& gap,
                                const PlaneBasis& basis);

struct TrialConfig {
  GapSpec gap;
  int approach_side = +1;
  WorldConstants world;
  bool allow_nonstandard_gravity = false;
  VehicleSpec vehicle;
  CameraMount mount;
  MeasurementModel sensor;
  ImuNoise imu;
  SamplingSpec sampling;
  double v0_max = 3.0;
  double d_min = 0.25;
  double v_nominal = 1.5;
  TraverseSearchBox search_box;
  double control_rate_hz = 50.0;
  double sim_rate_hz = 1000.0;
  ControllerGains gains;
  uint64_t seed = 1;
  double blackout_tail_s = 0.0;        // forced dropouts before the traverse
  double terminal_speed_limit = 6.0;   // m/s at t_end
  bool record_series = true;

  void validate() const;
};

enum class TrialPhase { kApproach = 0, kTraverse = 1 };

struct TrialSeriesRow {
  double t = 0.0;
  Vec3 p_true, v_true, rpy_true;
  Vec3 p_est, v_est, rpy_est;
  Vec3 p_ref, v_ref;
  TrialPhase phase = TrialPhase::kApproach;
  bool detected = false;
};

struct TrialReport {
  bool success = false;
  bool collided = false;
  bool crossed_plane = false;
  bool planning_failed = false;
  std::string failure_reason;

  Vec3 pos_error_tc = Vec3::Zero();   // world frame, truth minus desired
  Vec3 vel_error_tc = Vec3::Zero();
  double roll_error_tc = 0.0;         // rad, tilt about axis1
  double pitch_error_tc = 0.0;        // rad, tilt about axis2
  double min_clearance = 0.0;         // m, negative when collided
  double entry_pos_error = 0.0;       // m at traverse start
  double entry_vel_error = 0.0;       // m/s at traverse start
  double terminal_speed = 0.0;        // m/s at t_end

  double t_start_traverse = 0.0;
  double t_center = 0.0;
  double t_end = 0.0;
  int replan_count = 0;
  int detection_count = 0;
  int sim_steps = 0;

  double gap_roll = 0.0;   // rad, echoed from the gap pose
  double gap_pitch = 0.0;
  uint64_t seed = 0;

  std::vector<TrialSeriesRow> series;
};

/// Runs one closed-loop trial: plan the traverse and the approach, fly the
/// approach with the estimator in the loop and per-control-step
/// replanning, then execute the traverse open loop with constant inputs
/// until t_end. Deterministic under a fixed seed.
TrialReport run_trial(const TrialConfig& cfg);

/// Collision predicate at the plane crossing: center offsets along the gap
/// axes against the half-clearance margins. Returns the smaller of the two
/// remaining clearances (negative means contact).
double crossing_clearance(const Vec3& crossing_pos, const GapSpec& gap,
                          const VehicleSpec& vehicle);

}  // namespace gapflight
