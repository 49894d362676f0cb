#pragma once

#include <array>

#include <Eigen/Dense>

#include "gapflight/errors.hpp"

namespace gapflight {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rectangular gap: center position and orientation in the world frame.
/// The orientation columns are (long side, short side, plane normal);
/// width is the longest side, height the short one.
struct GapSpec {
  Vec3 center = Vec3::Zero();
  Mat3 orientation = Mat3::Identity();
  double width = 0.8;
  double height = 0.28;

  Vec3 long_axis() const { return orientation.col(0); }
  Vec3 short_axis() const { return orientation.col(1); }
  Vec3 normal() const { return orientation.col(2); }

  /// Throws InvalidParams unless the orientation is a proper rotation
  /// (orthonormal, det +1, within 1e-9) and width >= height > 0.
  void validate() const;

  /// The four corner positions in world coordinates.
  std::array<Vec3, 4> corners() const;
};

/// Right-handed orthonormal basis of the traverse plane: axis1 spans the
/// plane along the gap's long side, axis2 is the gap normal (pointing from
/// the approach side through the gap), axis3 is the plane normal.
struct PlaneBasis {
  Vec3 axis1 = Vec3::UnitY();
  Vec3 axis2 = Vec3::UnitX();
  Vec3 axis3 = Vec3::UnitZ();
};

struct WorldConstants {
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);
};

/// In-plane gravity split: the residual after compensating the component
/// along the plane normal, and its coordinates along axis1/axis2.
struct InPlaneGravity {
  Vec3 vec = Vec3::Zero();
  double along1 = 0.0;
  double along2 = 0.0;
};

/// Builds the traverse-plane basis for a gap.
///
/// axis2 = approach_side * gap normal, so that the approach region sits at
/// negative axis2 coordinates. axis1 follows the long side with its sign
/// picked so gravity never accelerates motion along +axis1
/// (<g, axis1> <= 0); ties (horizontal long side) keep the gap-frame
/// direction. axis3 = axis1 x axis2.
///
/// Throws DegenerateGap if the long side and the normal are not orthogonal
/// within 1e-6.
PlaneBasis plane_basis(const GapSpec& gap, const Vec3& gravity,
                       int approach_side = +1);

/// Removes the axis3 component of gravity and reports the in-plane rest.
InPlaneGravity gravity_in_plane(const PlaneBasis& basis, const Vec3& gravity);

/// Elementary rotations about the world axes.
Mat3 rot_x(double angle);
Mat3 rot_y(double angle);
Mat3 rot_z(double angle);

/// Gap orientation from roll (about world x) and pitch (about world y),
/// applied to the base pose whose long side is world y and normal world x:
/// R = Rx(roll) * Ry(pitch) * R_base.
Mat3 gap_orientation(double roll, double pitch);

/// SO(3) exponential (rotation vector -> rotation matrix).
Mat3 so3_exp(const Vec3& rotvec);

/// SO(3) logarithm (rotation matrix -> rotation vector).
Vec3 so3_log(const Mat3& rotation);

/// Re-orthonormalizes a near-rotation matrix (nearest rotation by SVD).
Mat3 orthonormalized(const Mat3& m);

/// ZYX yaw-pitch-roll extraction, R = Rz(yaw) * Ry(pitch) * Rx(roll).
Vec3 rpy_from_rotation(const Mat3& rotation);

}  // namespace gapflight
