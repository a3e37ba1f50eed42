#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace mmteleop {

/// Rigid transform: position in meters and a unit quaternion.
///
/// The orientation is kept normalized (|q| within 1e-9 of 1) and in the
/// w >= 0 hemisphere so that serialized poses are bit-stable. Normalization is
/// skipped when the input is already unit to 1e-12, which makes the
/// constructor idempotent on its own output.
class Pose {
 public:
  Pose() = default;
  Pose(const Eigen::Vector3d& position, const Eigen::Quaterniond& orientation);

  static Pose identity() { return {}; }
  static Pose from_translation(double x, double y, double z) {
    return {Eigen::Vector3d(x, y, z), Eigen::Quaterniond::Identity()};
  }

  const Eigen::Vector3d& position() const noexcept { return position_; }
  const Eigen::Quaterniond& orientation() const noexcept { return orientation_; }

  Eigen::Isometry3d isometry() const;
  static Pose from_isometry(const Eigen::Isometry3d& t);

  Pose operator*(const Pose& rhs) const;
  Pose inverse() const;

  bool operator==(const Pose& rhs) const noexcept {
    return position_ == rhs.position_ && orientation_.coeffs() == rhs.orientation_.coeffs();
  }

 private:
  Eigen::Vector3d position_ = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation_ = Eigen::Quaterniond::Identity();
};

/// Per-tick rigid displacement: translation (m) and rotation vector (rad),
/// both expressed in the fixed reference frame (robot base frame at command
/// time). The rotation magnitude is wrapped below pi at construction.
class DeltaPose {
 public:
  DeltaPose() = default;
  DeltaPose(const Eigen::Vector3d& translation, const Eigen::Vector3d& rotation);

  static DeltaPose zero() { return {}; }

  const Eigen::Vector3d& translation() const noexcept { return translation_; }
  const Eigen::Vector3d& rotation() const noexcept { return rotation_; }

  bool is_zero() const noexcept { return translation_.isZero(0.0) && rotation_.isZero(0.0); }

  /// Component-wise gain scaling.
  DeltaPose scaled(double translation_gain, double rotation_gain) const {
    return {translation_ * translation_gain, rotation_ * rotation_gain};
  }

  /// The same displacement expressed in a frame rotated by `r`.
  DeltaPose rotated(const Eigen::Quaterniond& r) const { return {r * translation_, r * rotation_}; }

  bool operator==(const DeltaPose& rhs) const noexcept {
    return translation_ == rhs.translation_ && rotation_ == rhs.rotation_;
  }

 private:
  Eigen::Vector3d translation_ = Eigen::Vector3d::Zero();
  Eigen::Vector3d rotation_ = Eigen::Vector3d::Zero();
};

/// Log map of a unit quaternion to a rotation vector with magnitude <= pi.
Eigen::Vector3d quaternion_log(const Eigen::Quaterniond& q);
/// Exponential map of a rotation vector to a unit quaternion.
Eigen::Quaterniond quaternion_exp(const Eigen::Vector3d& rotation);

/// Relative displacement taking `prev` to `cur`.
DeltaPose compose_delta(const Pose& prev, const Pose& cur);
/// Applies a displacement: position += translation, q = exp(rotation) * q.
Pose apply_delta(const Pose& pose, const DeltaPose& d);
/// Sequential composition: applying the result equals applying `first`, then `second`.
DeltaPose chain_deltas(const DeltaPose& first, const DeltaPose& second);

/// Angle between two orientations in radians.
double quaternion_distance(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

}  // namespace mmteleop
