#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mmteleop/action.hpp"
#include "mmteleop/pose.hpp"

namespace mmteleop {

enum class JointType : std::uint8_t { revolute, prismatic };

/// One joint of a serial chain: a fixed transform from the previous frame,
/// then motion about (revolute) or along (prismatic) a unit axis.
struct Joint {
  std::string name;
  JointType type = JointType::revolute;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  Pose origin;
  double lower = 0.0;
  double upper = 0.0;
  double max_velocity = 1.0;  // rad/s or m/s
};

/// Serial kinematic chain rooted in the torso frame.
struct Chain {
  std::string name;
  Pose mount;  // chain root in the torso frame
  std::vector<Joint> joints;
  Pose tool;   // end-effector point relative to the last joint frame
  Eigen::VectorXd home;

  std::size_t dof() const noexcept { return joints.size(); }
  Eigen::VectorXd lower_limits() const;
  Eigen::VectorXd upper_limits() const;
  Eigen::VectorXd max_velocities() const;
};

/// Prismatic lift along base z. The torso frame is the base frame raised by
/// the torso position.
struct TorsoSpec {
  double lower = 0.0;
  double upper = 0.0;
  double max_velocity = 0.1;
  double home = 0.0;
};

enum class BaseType : std::uint8_t { differential, omnidirectional };

enum class MountParent : std::uint8_t { base, torso };

/// Pinhole camera. `transform` places a body frame (x forward, y left, z up)
/// relative to the parent; the optical axis is the body +x.
struct CameraMount {
  std::string id;
  MountParent parent = MountParent::torso;
  Pose transform;
  int width = 128;
  int height = 128;
  double vfov_deg = 60.0;
};

struct EmbodimentSpec {
  std::string name;
  std::optional<Chain> left_arm;
  std::optional<Chain> right_arm;
  std::optional<TorsoSpec> torso;
  BaseType base_type = BaseType::differential;
  BaseVelocityLimits base_limits;
  std::vector<CameraMount> cameras;

  const Chain* arm(bool left) const { return left ? (left_arm ? &*left_arm : nullptr) : (right_arm ? &*right_arm : nullptr); }

  /// Checks lo < hi, unit axes, rigid transforms, at least one arm. Throws
  /// ConfigError.
  void validate() const;
};

/// Declarative YAML format, see docs/embodiment_format.md.
EmbodimentSpec parse_embodiment(const std::string& yaml_text);
EmbodimentSpec load_embodiment(const std::string& path);

}  // namespace mmteleop
