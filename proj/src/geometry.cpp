#include "gapflight/geometry.hpp"

#include <cmath>

namespace gapflight {

namespace {
constexpr double kOrthoTol = 1e-9;
}

void GapSpec::validate() const {
  const Mat3& R = orientation;
  if ((R.transpose() * R - Mat3::Identity()).norm() > kOrthoTol) {
    throw InvalidParams("gap orientation is not orthonormal");
  }
  if (std::abs(R.determinant() - 1.0) > kOrthoTol) {
    throw InvalidParams("gap orientation must have determinant +1");
  }
  if (!(width >= height && height > 0.0)) {
    throw InvalidParams("gap requires width >= height > 0");
  }
}

std::array<Vec3, 4> GapSpec::corners() const {
  const Vec3 u = 0.5 * width * long_axis();
  const Vec3 w = 0.5 * height * short_axis();
  return {center + u + w, center + u - w, center - u - w, center - u + w};
}

PlaneBasis plane_basis(const GapSpec& gap, const Vec3& gravity,
                       int approach_side) {
  const Vec3 long_dir = gap.long_axis();
  const Vec3 normal = gap.normal();
  if (std::abs(long_dir.dot(normal)) > 1e-6) {
    throw DegenerateGap("gap long side is not orthogonal to its normal");
  }

  PlaneBasis basis;
  basis.axis2 = (approach_side >= 0 ? 1.0 : -1.0) * normal.normalized();
  // Gravity must decelerate motion along +axis1; keep the gap-frame
  // direction when the long side is horizontal.
  basis.axis1 =
      (gravity.dot(long_dir) > 0.0 ? -long_dir : long_dir).normalized();
  basis.axis3 = basis.axis1.cross(basis.axis2).normalized();
  return basis;
}

InPlaneGravity gravity_in_plane(const PlaneBasis& basis, const Vec3& gravity) {
  InPlaneGravity out;
  out.vec = gravity - gravity.dot(basis.axis3) * basis.axis3;
  out.along1 = out.vec.dot(basis.axis1);
  out.along2 = out.vec.dot(basis.axis2);
  return out;
}

Mat3 rot_x(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return m;
}

Mat3 rot_y(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

Mat3 rot_z(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

Mat3 gap_orientation(double roll, double pitch) {
  Mat3 base;
  // columns: long side +y, short side +z, normal +x
  base.col(0) = Vec3::UnitY();
  base.col(1) = Vec3::UnitZ();
  base.col(2) = Vec3::UnitX();
  return rot_x(roll) * rot_y(pitch) * base;
}

Mat3 so3_exp(const Vec3& rotvec) {
  const double angle = rotvec.norm();
  if (angle < 1e-12) {
    Mat3 skew;
    skew << 0, -rotvec.z(), rotvec.y(), rotvec.z(), 0, -rotvec.x(),
        -rotvec.y(), rotvec.x(), 0;
    return Mat3::Identity() + skew;  // first-order step, angle ~ 0
  }
  return Eigen::AngleAxisd(angle, rotvec / angle).toRotationMatrix();
}

Vec3 so3_log(const Mat3& rotation) {
  Eigen::AngleAxisd aa(rotation);
  return aa.angle() * aa.axis();
}

Mat3 orthonormalized(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1.0;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return r;
}

Vec3 rpy_from_rotation(const Mat3& R) {
  const double pitch = std::asin(std::clamp(-R(2, 0), -1.0, 1.0));
  double roll, yaw;
  if (std::abs(R(2, 0)) < 1.0 - 1e-12) {
    roll = std::atan2(R(2, 1), R(2, 2));
    yaw = std::atan2(R(1, 0), R(0, 0));
  } else {
    roll = std::atan2(-R(1, 2), R(1, 1));  // gimbal lock, fold yaw into roll
    yaw = 0.0;
  }
  return Vec3(roll, pitch, yaw);
}

}  // namespace gapflight
