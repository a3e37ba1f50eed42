#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "mmteleop/action.hpp"
#include "mmteleop/embodiment.hpp"
#include "mmteleop/kinematics.hpp"

namespace mmteleop {

/// Joint positions (rad or m) and velocities. Arms absent from the
/// embodiment have zero-length vectors.
struct JointState {
  Eigen::VectorXd left_arm;
  Eigen::VectorXd right_arm;
  double torso = 0.0;
  Eigen::VectorXd left_arm_velocity;
  Eigen::VectorXd right_arm_velocity;
  double torso_velocity = 0.0;

  static JointState home(const EmbodimentSpec& spec);
  bool operator==(const JointState&) const = default;
};

/// Joint-level command for one control tick.
struct RobotCommand {
  Eigen::VectorXd left_arm;   // position targets
  Eigen::VectorXd right_arm;
  double torso = 0.0;         // position target, m
  BaseVelocity base;          // vy is 0 on a differential base
  std::optional<double> left_gripper;  // absent: keep the current state
  std::optional<double> right_gripper;
};

struct FilterStats {
  std::uint64_t removed_left_arm = 0;
  std::uint64_t removed_right_arm = 0;
  std::uint64_t removed_torso = 0;
  std::uint64_t zeroed_lateral = 0;
};

/// Drops fields the embodiment has no hardware for (the arm and gripper of a
/// missing side, torso on a fixed-torso robot) and zeroes vy on a
/// differential base. Idempotent; never throws.
ActionCommand filter_unusable(const ActionCommand& cmd, const EmbodimentSpec& spec, FilterStats* stats = nullptr);

struct MapOptions {
  IkOptions ik;
  int max_inner_iterations = 3;
  double residual_tolerance = 1e-4;
};

/// Normalized torso height of a torso position, 0 on robots without torso.
double normalized_torso(const EmbodimentSpec& spec, double torso_position);

/// Maps a filtered command to joint targets: arm deltas go through up to
/// `max_inner_iterations` damped least-squares steps toward
/// apply_delta(FK(q), delta), capped per joint at max_velocity * tick and
/// clamped to the joint limits; torso t maps to lo + t (hi - lo); base and
/// grippers pass through within the embodiment caps.
RobotCommand map_command(const ActionCommand& cmd, const JointState& state, const EmbodimentSpec& spec,
                         const MapOptions& options = {});

}  // namespace mmteleop
