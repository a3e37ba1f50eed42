#include "mmteleop/robot_interface.hpp"

#include <algorithm>

namespace mmteleop {

JointState JointState::home(const EmbodimentSpec& spec) {
  JointState s;
  if (spec.left_arm) {
    s.left_arm = spec.left_arm->home;
    s.left_arm_velocity = Eigen::VectorXd::Zero(s.left_arm.size());
  }
  if (spec.right_arm) {
    s.right_arm = spec.right_arm->home;
    s.right_arm_velocity = Eigen::VectorXd::Zero(s.right_arm.size());
  }
  if (spec.torso) s.torso = spec.torso->home;
  return s;
}

ActionCommand filter_unusable(const ActionCommand& cmd, const EmbodimentSpec& spec, FilterStats* stats) {
  ActionCommand out = cmd;
  FilterStats local;
  FilterStats& st = stats ? *stats : local;
  if (!spec.left_arm && (out.left_arm || out.left_gripper)) {
    out.left_arm.reset();
    out.left_gripper.reset();
    ++st.removed_left_arm;
  }
  if (!spec.right_arm && (out.right_arm || out.right_gripper)) {
    out.right_arm.reset();
    out.right_gripper.reset();
    ++st.removed_right_arm;
  }
  if (!spec.torso && out.torso) {
    out.torso.reset();
    ++st.removed_torso;
  }
  if (spec.base_type == BaseType::differential && out.base && out.base->value.vy != 0.0) {
    out.base->value.vy = 0.0;
    ++st.zeroed_lateral;
  }
  return out;
}

double normalized_torso(const EmbodimentSpec& spec, double torso_position) {
  if (!spec.torso) return 0.0;
  return (torso_position - spec.torso->lower) / (spec.torso->upper - spec.torso->lower);
}

namespace {

Eigen::VectorXd solve_arm(const Chain& chain, const Eigen::VectorXd& q, const DeltaPose& delta,
                          const MapOptions& options) {
  if (delta.is_zero()) return q;
  const Pose target = apply_delta(forward_kinematics(chain, q), delta);
  const Eigen::VectorXd cap = chain.max_velocities() * options.ik.tick_s;
  Eigen::VectorXd qi = q;
  for (int it = 0; it < options.max_inner_iterations; ++it) {
    const Vector6d e = pose_error(target, forward_kinematics(chain, qi));
    if (e.norm() < options.residual_tolerance) break;
    const Eigen::VectorXd dq = diff_ik_step(chain, qi, DeltaPose(e.head<3>(), e.tail<3>()), options.ik);
    Eigen::VectorXd next = qi + dq;
    if (options.ik.tick_s > 0.0) next = next.cwiseMax(q - cap).cwiseMin(q + cap);
    qi = clamp_to_limits(chain, next);
  }
  return qi;
}

}  // namespace

RobotCommand map_command(const ActionCommand& cmd, const JointState& state, const EmbodimentSpec& spec,
                         const MapOptions& options) {
  RobotCommand out;
  out.left_arm = state.left_arm;
  out.right_arm = state.right_arm;
  out.torso = state.torso;

  if (spec.left_arm && cmd.left_arm) out.left_arm = solve_arm(*spec.left_arm, state.left_arm, cmd.left_arm->value, options);
  if (spec.right_arm && cmd.right_arm) {
    out.right_arm = solve_arm(*spec.right_arm, state.right_arm, cmd.right_arm->value, options);
  }
  if (spec.torso && cmd.torso) {
    const double t = std::clamp(cmd.torso->value, 0.0, 1.0);
    out.torso = spec.torso->lower + t * (spec.torso->upper - spec.torso->lower);
  }
  if (cmd.base) {
    out.base = cmd.base->value.clamped(spec.base_limits);
    if (spec.base_type == BaseType::differential) out.base.vy = 0.0;
  }
  if (spec.left_arm && cmd.left_gripper) out.left_gripper = std::clamp(cmd.left_gripper->value, 0.0, 1.0);
  if (spec.right_arm && cmd.right_gripper) out.right_gripper = std::clamp(cmd.right_gripper->value, 0.0, 1.0);
  return out;
}

}  // namespace mmteleop
