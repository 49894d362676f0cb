#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "gapflight/perception.hpp"

namespace gapflight {

/// Seeded generator for all stochastic draws in a trial. Box-Muller with a
/// cached spare keeps gaussian draws cheap and reproducible.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    if (u1 < 1e-300) u1 = 1e-300;
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  Vec3 gaussian3() {
    const double a = gaussian(), b = gaussian(), c = gaussian();
    return Vec3(a, b, c);
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Detection statistics of the gap sensor: noise grows quadratically with
/// distance, detections arrive at a fixed rate, and fail outside the
/// distance range, above the blur body-rate, or on a random dropout.
struct MeasurementModel {
  double sigma_pos0 = 0.005;   // m at 1 m
  double sigma_rot0 = 0.0087;  // rad at 1 m
  double rate_hz = 30.0;
  double p_dropout = 0.05;
  double omega_blur = 7.0;     // rad/s
  double range_min = 0.3;      // m
  double range_max = 8.0;      // m

  double sigma_pos(double distance) const {
    return sigma_pos0 * distance * distance;
  }
  double sigma_rot(double distance) const {
    return sigma_rot0 * distance * distance;
  }

  void validate() const {
    if (sigma_pos0 < 0.0 || sigma_rot0 < 0.0 || rate_hz <= 0.0 ||
        p_dropout < 0.0 || p_dropout > 1.0 || omega_blur < 0.0 ||
        !(range_min < range_max) || range_min < 0.0) {
      throw InvalidParams("invalid measurement model");
    }
  }
};

/// Pose of the gap expressed in the body frame.
struct RelativePose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
};

/// Noisy relative pose plus the per-axis standard deviations that define
/// its (diagonal) covariance.
struct GapMeasurement {
  RelativePose pose;
  double sigma_pos = 0.0;
  double sigma_rot = 0.0;
};

/// World-frame vehicle pose observation derived from a gap detection.
struct PoseMeasurement {
  Vec3 position = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
  double sigma_pos = 0.0;
  double sigma_rot = 0.0;
};

/// Whether the detector can see the gap: bearing and all four corners
/// inside the field-of-view cone, distance within range, body rate below
/// the blur threshold.
bool gap_visible(const Vec3& position, const Mat3& attitude,
                 const GapSpec& gap, const CameraMount& mount,
                 double body_rate, const MeasurementModel& model);

/// Perturbs the true relative pose with zero-mean Gaussian noise whose
/// std grows with distance squared. Throws NotVisible when the distance is
/// outside the detector range (the caller gates on full visibility).
GapMeasurement measure_gap_pose(const RelativePose& true_rel, double distance,
                                const MeasurementModel& model, Rng& rng);

/// Inverts a relative-pose measurement into a world-frame vehicle pose,
/// given the gap pose the planner works against.
PoseMeasurement vehicle_pose_from_measurement(const GapMeasurement& meas,
                                              const GapSpec& gap);

/// Measured specific force and body rates.
struct ImuSample {
  Vec3 accel = Vec3::Zero();  // body frame, m/s^2
  Vec3 gyro = Vec3::Zero();   // body frame, rad/s
};

/// White-noise intensities the filter models (per estimator step), plus
/// per-trial constant biases the filter deliberately does not model.
struct ImuNoise {
  double accel_std = 0.05;       // m/s^2 per step
  double gyro_std = 0.005;       // rad/s per step
  double accel_bias_std = 0.2;   // m/s^2, drawn once per trial
  double gyro_bias_std = 0.01;   // rad/s, drawn once per trial
};

/// Error-state estimate: position, velocity, attitude and their joint
/// 9x9 covariance (p, v, attitude blocks in that order).
struct StateEstimate {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Mat3 attitude = Mat3::Identity();
  Eigen::Matrix<double, 9, 9> covariance =
      Eigen::Matrix<double, 9, 9>::Identity();
  double last_detection_age = 0.0;
};

/// One predict(-and-correct) cycle of the error-state Kalman filter:
/// IMU mechanization each call, pose update when a measurement is present.
StateEstimate estimator_step(const StateEstimate& est, const ImuSample& imu,
                             const ImuNoise& noise,
                             const std::optional<PoseMeasurement>& meas,
                             double dt, const Vec3& gravity);

}  // namespace gapflight
