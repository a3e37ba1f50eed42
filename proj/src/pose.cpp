#include "mmteleop/pose.hpp"

#include <cmath>
#include <numbers>

namespace mmteleop {

namespace {

Eigen::Quaterniond canonical(Eigen::Quaterniond q) {
  const double n = q.norm();
  if (std::abs(n - 1.0) > 1e-12) {
    if (n == 0.0 || !std::isfinite(n)) return Eigen::Quaterniond::Identity();
    q.coeffs() /= n;
  }
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

}  // namespace

Pose::Pose(const Eigen::Vector3d& position, const Eigen::Quaterniond& orientation)
    : position_(position), orientation_(canonical(orientation)) {}

Eigen::Isometry3d Pose::isometry() const {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.linear() = orientation_.toRotationMatrix();
  t.translation() = position_;
  return t;
}

Pose Pose::from_isometry(const Eigen::Isometry3d& t) {
  return {t.translation(), Eigen::Quaterniond(t.linear())};
}

Pose Pose::operator*(const Pose& rhs) const {
  return {position_ + orientation_ * rhs.position_, orientation_ * rhs.orientation_};
}

Pose Pose::inverse() const {
  const Eigen::Quaterniond qi = orientation_.conjugate();
  return {-(qi * position_), qi};
}

DeltaPose::DeltaPose(const Eigen::Vector3d& translation, const Eigen::Vector3d& rotation)
    : translation_(translation), rotation_(rotation) {
  const double angle = rotation_.norm();
  if (angle >= std::numbers::pi && std::isfinite(angle)) {
    double wrapped = std::fmod(angle, 2.0 * std::numbers::pi);
    if (wrapped > std::numbers::pi) wrapped -= 2.0 * std::numbers::pi;
    rotation_ *= wrapped / angle;
  }
}

Eigen::Vector3d quaternion_log(const Eigen::Quaterniond& q_in) {
  Eigen::Quaterniond q = q_in;
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const Eigen::Vector3d v = q.vec();
  const double n = v.norm();
  if (n < 1e-12) {
    // atan2(n, w) / n -> 1/w for small n
    return v * (2.0 / q.w());
  }
  return v * (2.0 * std::atan2(n, q.w()) / n);
}

Eigen::Quaterniond quaternion_exp(const Eigen::Vector3d& rotation) {
  const double angle = rotation.norm();
  if (angle < 1e-12) {
    Eigen::Quaterniond q(1.0, 0.5 * rotation.x(), 0.5 * rotation.y(), 0.5 * rotation.z());
    return q.normalized();
  }
  const double s = std::sin(0.5 * angle) / angle;
  return {std::cos(0.5 * angle), s * rotation.x(), s * rotation.y(), s * rotation.z()};
}

DeltaPose compose_delta(const Pose& prev, const Pose& cur) {
  return {cur.position() - prev.position(),
          quaternion_log(cur.orientation() * prev.orientation().conjugate())};
}

Pose apply_delta(const Pose& pose, const DeltaPose& d) {
  return {pose.position() + d.translation(), quaternion_exp(d.rotation()) * pose.orientation()};
}

DeltaPose chain_deltas(const DeltaPose& first, const DeltaPose& second) {
  const Eigen::Quaterniond q = quaternion_exp(second.rotation()) * quaternion_exp(first.rotation());
  return {first.translation() + second.translation(), quaternion_log(q)};
}

double quaternion_distance(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
  return quaternion_log(a * b.conjugate()).norm();
}

double wrap_angle(double a) {
  a = std::fmod(a + std::numbers::pi, 2.0 * std::numbers::pi);
  if (a <= 0.0) a += 2.0 * std::numbers::pi;
  return a - std::numbers::pi;
}

}  // namespace mmteleop
