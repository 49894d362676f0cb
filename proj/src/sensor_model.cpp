#include "gapflight/sensor_model.hpp"

#include <cmath>

namespace gapflight {

namespace {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

bool inside_fov(const Vec3& optical_axis, const Vec3& to_point,
                double fov_half) {
  const double n = to_point.norm();
  if (n < 1e-9) return false;
  const double c = std::clamp(optical_axis.dot(to_point) / n, -1.0, 1.0);
  return std::acos(c) < fov_half;
}

}  // namespace

bool gap_visible(const Vec3& position, const Mat3& attitude,
                 const GapSpec& gap, const CameraMount& mount,
                 double body_rate, const MeasurementModel& model) {
  const Vec3 bearing = gap.center - position;
  const double distance = bearing.norm();
  if (distance < model.range_min || distance > model.range_max) return false;
  if (body_rate >= model.omega_blur) return false;

  const Vec3 axis = attitude * mount.body_axis();
  if (!inside_fov(axis, bearing, mount.fov_half)) return false;
  for (const Vec3& corner : gap.corners()) {
    if (!inside_fov(axis, corner - position, mount.fov_half)) return false;
  }
  return true;
}

GapMeasurement measure_gap_pose(const RelativePose& true_rel, double distance,
                                const MeasurementModel& model, Rng& rng) {
  if (distance < model.range_min || distance > model.range_max) {
    throw NotVisible("gap outside detector range");
  }
  GapMeasurement meas;
  meas.sigma_pos = model.sigma_pos(distance);
  meas.sigma_rot = model.sigma_rot(distance);
  meas.pose.translation =
      true_rel.translation + meas.sigma_pos * rng.gaussian3();
  meas.pose.rotation =
      true_rel.rotation * so3_exp(meas.sigma_rot * rng.gaussian3());
  return meas;
}

PoseMeasurement vehicle_pose_from_measurement(const GapMeasurement& meas,
                                              const GapSpec& gap) {
  PoseMeasurement out;
  out.rotation = gap.orientation * meas.pose.rotation.transpose();
  out.position = gap.center - out.rotation * meas.pose.translation;
  out.sigma_pos = meas.sigma_pos;
  out.sigma_rot = meas.sigma_rot;
  return out;
}

StateEstimate estimator_step(const StateEstimate& est, const ImuSample& imu,
                             const ImuNoise& noise,
                             const std::optional<PoseMeasurement>& meas,
                             double dt, const Vec3& gravity) {
  if (!(dt > 0.0)) throw InvalidParams("estimator step needs dt > 0");

  using Mat9 = Eigen::Matrix<double, 9, 9>;

  StateEstimate out = est;
  const Vec3 accel_world = est.attitude * imu.accel + gravity;
  out.position = est.position + est.velocity * dt + 0.5 * accel_world * dt * dt;
  out.velocity = est.velocity + accel_world * dt;
  out.attitude = est.attitude * so3_exp(imu.gyro * dt);
  out.last_detection_age = est.last_detection_age + dt;

  // Error-state transition (body-side attitude error).
  const Mat3 I3 = Mat3::Identity();
  const Mat3 ra_skew = est.attitude * skew(imu.accel);
  Mat9 F = Mat9::Identity();
  F.block<3, 3>(0, 3) = I3 * dt;
  F.block<3, 3>(0, 6) = -0.5 * ra_skew * dt * dt;
  F.block<3, 3>(3, 6) = -ra_skew * dt;
  F.block<3, 3>(6, 6) = so3_exp(-imu.gyro * dt);

  const double qa = noise.accel_std * noise.accel_std;
  const double qg = noise.gyro_std * noise.gyro_std;
  Mat9 Q = Mat9::Zero();
  Q.block<3, 3>(0, 0) = 0.25 * qa * dt * dt * dt * dt * I3;
  Q.block<3, 3>(0, 3) = 0.5 * qa * dt * dt * dt * I3;
  Q.block<3, 3>(3, 0) = Q.block<3, 3>(0, 3);
  Q.block<3, 3>(3, 3) = qa * dt * dt * I3;
  Q.block<3, 3>(6, 6) = qg * dt * dt * I3;

  out.covariance = F * est.covariance * F.transpose() + Q;

  if (meas) {
    using Mat69 = Eigen::Matrix<double, 6, 9>;
    using Vec6 = Eigen::Matrix<double, 6, 1>;

    Mat69 H = Mat69::Zero();
    H.block<3, 3>(0, 0) = I3;
    H.block<3, 3>(3, 6) = I3;

    Vec6 innovation;
    innovation.head<3>() = meas->position - out.position;
    innovation.tail<3>() = so3_log(out.attitude.transpose() * meas->rotation);

    Eigen::Matrix<double, 6, 6> R = Eigen::Matrix<double, 6, 6>::Zero();
    R.topLeftCorner<3, 3>() = meas->sigma_pos * meas->sigma_pos * I3;
    R.bottomRightCorner<3, 3>() = meas->sigma_rot * meas->sigma_rot * I3;

    const Eigen::Matrix<double, 6, 6> S =
        H * out.covariance * H.transpose() + R;
    const Eigen::Matrix<double, 9, 6> K =
        out.covariance * H.transpose() * S.ldlt().solve(
            Eigen::Matrix<double, 6, 6>::Identity());
    const Eigen::Matrix<double, 9, 1> dx = K * innovation;

    out.position += dx.head<3>();
    out.velocity += dx.segment<3>(3);
    out.attitude = out.attitude * so3_exp(dx.tail<3>());

    const Mat9 IKH = Mat9::Identity() - K * H;
    out.covariance =
        IKH * out.covariance * IKH.transpose() + K * R * K.transpose();
    out.last_detection_age = 0.0;
  }

  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

}  // namespace gapflight
