#include <doctest.h>

#include <cmath>

#include "gapflight/sensor_model.hpp"
#include "test_helpers.hpp"

using namespace gapflight;
using gapflight::testing::TestRng;

namespace {

const Vec3 kGravity(0.0, 0.0, -9.81);

GapSpec gap_at(double roll_deg, double pitch_deg,
               const Vec3& center = Vec3(0.0, 0.0, 1.5)) {
  GapSpec gap;
  gap.center = center;
  gap.orientation =
      gap_orientation(roll_deg * M_PI / 180.0, pitch_deg * M_PI / 180.0);
  return gap;
}

// Attitude looking along +x from a point on the -x side of the gap.
Mat3 facing_gap() { return Mat3::Identity(); }

// Wilson-Hilferty chi-square quantile approximation.
double chi2_quantile(double p, double dof) {
  const double z = p < 0.5 ? -std::sqrt(-2.0 * std::log(2.0 * p))
                           : std::sqrt(-2.0 * std::log(2.0 * (1.0 - p)));
  // Beasley-Springer-ish refinement is unnecessary at these dof; the cube
  // approximation is good to a fraction of a percent.
  const double zz =
      p < 0.5 ? -(2.515517 + 0.802853 * -z + 0.010328 * z * z) /
                    (1.0 + 1.432788 * -z + 0.189269 * z * z +
                     0.001308 * -z * z * z)
              : (2.515517 + 0.802853 * z + 0.010328 * z * z) /
                    (1.0 + 1.432788 * z + 0.189269 * z * z +
                     0.001308 * z * z * z);
  const double zp = p < 0.5 ? -(-z - zz) : z - zz;
  const double t = 1.0 - 2.0 / (9.0 * dof) + zp * std::sqrt(2.0 / (9.0 * dof));
  return dof * t * t * t;
}

}  // namespace

TEST_CASE("visibility predicate") {
  const GapSpec gap = gap_at(0.0, 0.0);
  const MeasurementModel model;
  const CameraMount mount;

  // hovering 3 m in front, facing the gap
  CHECK(gap_visible(Vec3(-3.0, 0.0, 1.5), facing_gap(), gap, mount, 0.0,
                    model));
  // too close
  CHECK(!gap_visible(Vec3(-0.1, 0.0, 1.5), facing_gap(), gap, mount, 0.0,
                     model));
  // too far
  CHECK(!gap_visible(Vec3(-9.0, 0.0, 1.5), facing_gap(), gap, mount, 0.0,
                     model));
  // motion blur threshold straddled
  CHECK(gap_visible(Vec3(-3.0, 0.0, 1.5), facing_gap(), gap, mount,
                    model.omega_blur - 1e-6, model));
  CHECK(!gap_visible(Vec3(-3.0, 0.0, 1.5), facing_gap(), gap, mount,
                     model.omega_blur + 1e-6, model));
  CHECK(!gap_visible(Vec3(-3.0, 0.0, 1.5), facing_gap(), gap, mount, 8.0,
                     model));
  // looking away
  CHECK(!gap_visible(Vec3(-3.0, 0.0, 1.5), rot_z(M_PI), gap, mount, 0.0,
                     model));
}

TEST_CASE("corner visibility with a narrow lens") {
  const GapSpec gap = gap_at(0.0, 0.0);
  CameraMount mount;
  mount.fov_half = 0.12;  // ~7 degrees
  const MeasurementModel model;

  // center is inside the cone from afar, and the corners subtend less
  // than the fov there
  CHECK(gap_visible(Vec3(-6.0, 0.0, 1.5), facing_gap(), gap, mount, 0.0,
                    model));
  // closer in, the corners leave the narrow cone while the center stays
  CHECK(!gap_visible(Vec3(-1.0, 0.0, 1.5), facing_gap(), gap, mount, 0.0,
                     model));
}

TEST_CASE("zero noise measures exactly and repeats under a seed") {
  MeasurementModel model;
  model.sigma_pos0 = 0.0;
  model.sigma_rot0 = 0.0;
  RelativePose rel;
  rel.translation = Vec3(2.0, 0.3, -0.2);
  rel.rotation = rot_z(0.4);

  Rng rng(7);
  const GapMeasurement m = measure_gap_pose(rel, 2.0, model, rng);
  CHECK((m.pose.translation - rel.translation).norm() == 0.0);
  CHECK((m.pose.rotation - rel.rotation).norm() == 0.0);

  MeasurementModel noisy;
  Rng a(123), b(123);
  const GapMeasurement ma = measure_gap_pose(rel, 2.0, noisy, a);
  const GapMeasurement mb = measure_gap_pose(rel, 2.0, noisy, b);
  CHECK((ma.pose.translation - mb.pose.translation).norm() == 0.0);
  CHECK((ma.pose.rotation - mb.pose.rotation).norm() == 0.0);

  CHECK_THROWS_AS(measure_gap_pose(rel, 0.1, noisy, a), NotVisible);
  CHECK_THROWS_AS(measure_gap_pose(rel, 9.0, noisy, a), NotVisible);
}

TEST_CASE("noise grows with the square of the distance") {
  MeasurementModel model;
  RelativePose rel;
  rel.translation = Vec3(1.0, 0.0, 0.0);

  Rng rng(2024);
  const int n = 100000;
  const auto empirical_std = [&](double dist) {
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const GapMeasurement m = measure_gap_pose(rel, dist, model, rng);
      const double x = m.pose.translation.x() - rel.translation.x();
      sum += x;
      sum_sq += x * x;
    }
    const double mean = sum / n;
    return std::sqrt(sum_sq / n - mean * mean);
  };

  const double s1 = empirical_std(1.0);
  const double s2 = empirical_std(2.0);
  const double s3 = empirical_std(3.0);
  CHECK(s1 == doctest::Approx(0.005).epsilon(0.03));
  CHECK(s3 == doctest::Approx(0.045).epsilon(0.03));
  CHECK(s2 == doctest::Approx(4.0 * s1).epsilon(0.05));
}

TEST_CASE("vehicle pose inversion is consistent") {
  TestRng trng(5);
  const GapSpec gap = gap_at(25.0, 10.0);
  for (int i = 0; i < 20; ++i) {
    const Vec3 p = gap.center - 3.0 * gap.normal() + trng.vec3(-0.5, 0.5);
    const Mat3 R = so3_exp(trng.vec3(-0.3, 0.3));
    RelativePose rel;
    rel.rotation = R.transpose() * gap.orientation;
    rel.translation = R.transpose() * (gap.center - p);

    MeasurementModel zero;
    zero.sigma_pos0 = 0.0;
    zero.sigma_rot0 = 0.0;
    Rng rng(1);
    const PoseMeasurement pm = vehicle_pose_from_measurement(
        measure_gap_pose(rel, rel.translation.norm(), zero, rng), gap);
    CHECK((pm.position - p).norm() < 1e-12);
    CHECK((pm.rotation - R).norm() < 1e-12);
  }
}

TEST_CASE("perfect IMU mechanization tracks constant acceleration") {
  StateEstimate est;
  est.position = Vec3(1.0, 2.0, 3.0);
  est.velocity = Vec3(0.5, -0.2, 0.1);
  est.covariance *= 1e-6;

  const Vec3 accel_world(0.3, -0.4, 0.2);
  ImuSample imu;
  imu.accel = accel_world - kGravity;  // attitude is identity
  imu.gyro = Vec3::Zero();
  ImuNoise noise;
  noise.accel_std = 0.0;
  noise.gyro_std = 0.0;

  const double dt = 1e-3;
  const Vec3 p0 = est.position, v0 = est.velocity;
  for (int i = 0; i < 1000; ++i) {
    est = estimator_step(est, imu, noise, std::nullopt, dt, kGravity);
  }
  const double t = 1.0;
  CHECK((est.position - (p0 + v0 * t + 0.5 * accel_world * t * t)).norm() <
        1e-6);
  CHECK((est.velocity - (v0 + accel_world * t)).norm() < 1e-6);
  CHECK(est.last_detection_age == doctest::Approx(1.0));
}

TEST_CASE("filter smooths a stationary target below the measurement std") {
  Rng rng(555);
  const double sigma_meas = 0.05;
  ImuNoise noise;
  noise.accel_std = 0.02;
  noise.gyro_std = 0.002;

  StateEstimate est;
  est.covariance *= 0.01;
  const double dt = 0.01;

  double err_sq = 0.0;
  int samples = 0;
  for (int i = 0; i < 1000; ++i) {
    ImuSample imu;
    imu.accel = -kGravity + noise.accel_std * rng.gaussian3();
    imu.gyro = noise.gyro_std * rng.gaussian3();
    PoseMeasurement meas;
    meas.position = sigma_meas * rng.gaussian3();
    meas.rotation = so3_exp(0.01 * rng.gaussian3());
    meas.sigma_pos = sigma_meas;
    meas.sigma_rot = 0.01;
    est = estimator_step(est, imu, noise, meas, dt, kGravity);
    if (i > 500) {
      err_sq += est.position.squaredNorm() / 3.0;
      ++samples;
    }
  }
  const double err_std = std::sqrt(err_sq / samples);
  CHECK(err_std < sigma_meas);
}

TEST_CASE("covariance trace never shrinks during an outage") {
  Rng rng(99);
  ImuNoise noise;
  StateEstimate est;
  est.covariance *= 1e-4;
  const double dt = 0.01;

  // settle with measurements first
  for (int i = 0; i < 200; ++i) {
    ImuSample imu;
    imu.accel = -kGravity + noise.accel_std * rng.gaussian3();
    imu.gyro = noise.gyro_std * rng.gaussian3();
    PoseMeasurement meas;
    meas.position = 0.01 * rng.gaussian3();
    meas.rotation = so3_exp(0.005 * rng.gaussian3());
    meas.sigma_pos = 0.01;
    meas.sigma_rot = 0.005;
    est = estimator_step(est, imu, noise, meas, dt, kGravity);
  }
  double prev_trace = est.covariance.trace();
  for (int i = 0; i < 100; ++i) {
    ImuSample imu;
    imu.accel = -kGravity + noise.accel_std * rng.gaussian3();
    imu.gyro = noise.gyro_std * rng.gaussian3();
    est = estimator_step(est, imu, noise, std::nullopt, dt, kGravity);
    CHECK(est.covariance.trace() >= prev_trace - 1e-15);
    prev_trace = est.covariance.trace();
  }
  CHECK(est.last_detection_age == doctest::Approx(1.0));
}

TEST_CASE("estimate error stays bounded across a detection outage") {
  Rng rng(31);
  ImuNoise noise;  // white noise only, no bias
  noise.accel_bias_std = 0.0;
  noise.gyro_bias_std = 0.0;

  StateEstimate est;
  est.covariance *= 1e-4;
  const double dt = 0.01;
  // hovering truth at the origin; measurements for 2 s, outage for 0.4 s
  for (int i = 0; i < 240; ++i) {
    ImuSample imu;
    imu.accel = -kGravity + noise.accel_std * rng.gaussian3();
    imu.gyro = noise.gyro_std * rng.gaussian3();
    std::optional<PoseMeasurement> meas;
    if (i < 200) {
      PoseMeasurement m;
      m.position = 0.005 * rng.gaussian3();
      m.rotation = so3_exp(0.005 * rng.gaussian3());
      m.sigma_pos = 0.005;
      m.sigma_rot = 0.005;
      meas = m;
    }
    est = estimator_step(est, imu, noise, meas, dt, kGravity);
  }
  CHECK(est.position.norm() < 0.05);  // bounded after 0.4 s without fixes
}

TEST_CASE("average NEES sits inside the 95% chi-square band") {
  // 40 independent hover runs, white noise matched to the filter model
  const int runs = 40;
  const double dt = 0.01;
  const int steps = 150;
  ImuNoise noise;

  double nees_sum = 0.0;
  for (int r = 0; r < runs; ++r) {
    Rng rng(1000 + r);
    StateEstimate est;
    est.position = Vec3::Zero();
    est.covariance.setZero();
    est.covariance.block<3, 3>(0, 0) = 1e-4 * Mat3::Identity();
    est.covariance.block<3, 3>(3, 3) = 1e-4 * Mat3::Identity();
    est.covariance.block<3, 3>(6, 6) = 1e-4 * Mat3::Identity();

    // truth: stationary hover at origin, attitude identity
    Vec3 p_true = Vec3::Zero(), v_true = Vec3::Zero();
    Mat3 R_true = Mat3::Identity();

    for (int i = 0; i < steps; ++i) {
      ImuSample imu;
      imu.accel = -kGravity + noise.accel_std * rng.gaussian3();
      imu.gyro = noise.gyro_std * rng.gaussian3();
      std::optional<PoseMeasurement> meas;
      if (i % 3 == 0) {
        PoseMeasurement m;
        m.sigma_pos = 0.01;
        m.sigma_rot = 0.01;
        m.position = p_true + m.sigma_pos * rng.gaussian3();
        m.rotation = R_true * so3_exp(m.sigma_rot * rng.gaussian3());
        meas = m;
      }
      est = estimator_step(est, imu, noise, meas, dt, kGravity);
    }
    Eigen::Matrix<double, 9, 1> err;
    err.head<3>() = est.position - p_true;
    err.segment<3>(3) = est.velocity - v_true;
    err.tail<3>() = so3_log(est.attitude.transpose() * R_true);
    nees_sum += err.dot(est.covariance.ldlt().solve(err));
  }
  const double mean_nees = nees_sum / runs;
  const double dof = 9.0 * runs;
  const double lo = chi2_quantile(0.025, dof) / runs;
  const double hi = chi2_quantile(0.975, dof) / runs;
  CHECK(mean_nees >= lo);
  CHECK(mean_nees <= hi);
}
