#include "mmteleop/simulator.hpp"

#include <cmath>
#include <limits>

#include "mmteleop/errors.hpp"

namespace mmteleop {

BasePose2d integrate_base(const BasePose2d& b, const BaseVelocity& v, double dt) {
  BasePose2d out = b;
  if (std::abs(v.wz) > 1e-6) {
    const double th1 = b.theta + v.wz * dt;
    const double S = std::sin(th1) - std::sin(b.theta);
    const double C = std::cos(th1) - std::cos(b.theta);
    out.x += (v.vx * S + v.vy * C) / v.wz;
    out.y += (-v.vx * C + v.vy * S) / v.wz;
    out.theta = wrap_angle(th1);
  } else {
    const double c = std::cos(b.theta), s = std::sin(b.theta);
    out.x += (v.vx * c - v.vy * s) * dt;
    out.y += (v.vx * s + v.vy * c) * dt;
    out.theta = wrap_angle(b.theta + v.wz * dt);
  }
  return out;
}

WorldState set_grasp(const WorldState& state, const EmbodimentSpec& spec, Hand hand, bool engage) {
  WorldState out = state;
  auto& slot = out.grasps[static_cast<int>(hand)];
  if (!engage) {
    slot.reset();
    return out;
  }
  if (slot) return out;
  const auto hp = hand_in_world(spec, state, hand);
  if (!hp) return out;

  const SceneObject* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const SceneObject& o : state.objects) {
    if (!o.graspable) continue;
    bool taken = false;
    for (const auto& g : state.grasps) taken = taken || (g && g->object_id == o.id);
    if (taken) continue;
    const Eigen::Vector3d local = o.pose.inverse().isometry() * hp->position();
    const double d = surface_distance(o.shape, local);
    if (d <= kGraspThreshold && d < best_d) {
      best = &o;
      best_d = d;
    }
  }
  if (best != nullptr) slot = GraspConstraint{best->id, hp->inverse() * best->pose};
  return out;
}

void apply_grasp_constraints(WorldState& state, const EmbodimentSpec& spec) {
  for (Hand hand : {Hand::left, Hand::right}) {
    const auto& g = state.grasps[static_cast<int>(hand)];
    if (!g) continue;
    SceneObject* o = state.find(g->object_id);
    const auto hp = hand_in_world(spec, state, hand);
    if (o != nullptr && hp) o->pose = *hp * g->relative;
  }
}

namespace {

void move_chain(const Chain& chain, const Eigen::VectorXd& target, double dt, Eigen::VectorXd& q,
                Eigen::VectorXd& qd) {
  const Eigen::VectorXd cap = chain.max_velocities() * dt;
  const Eigen::VectorXd goal = clamp_to_limits(chain, target);
  const Eigen::VectorXd next = clamp_to_limits(chain, q + (goal - q).cwiseMax(-cap).cwiseMin(cap));
  qd = (next - q) / dt;
  q = next;
}

}  // namespace

WorldState step(const WorldState& state, const RobotCommand& cmd, double dt, const EmbodimentSpec& spec) {
  if (!(dt > 0.0 && dt <= 0.1)) throw DomainError("step dt must be in (0, 0.1], got " + std::to_string(dt));
  WorldState s = state;
  s.sim_time += dt;

  BaseVelocity v = cmd.base.clamped(spec.base_limits);
  if (spec.base_type == BaseType::differential) v.vy = 0.0;
  s.base = integrate_base(s.base, v, dt);

  if (spec.left_arm && cmd.left_arm.size() == s.joints.left_arm.size()) {
    move_chain(*spec.left_arm, cmd.left_arm, dt, s.joints.left_arm, s.joints.left_arm_velocity);
  }
  if (spec.right_arm && cmd.right_arm.size() == s.joints.right_arm.size()) {
    move_chain(*spec.right_arm, cmd.right_arm, dt, s.joints.right_arm, s.joints.right_arm_velocity);
  }
  if (spec.torso) {
    const double goal = std::clamp(cmd.torso, spec.torso->lower, spec.torso->upper);
    const double cap = spec.torso->max_velocity * dt;
    const double next = s.joints.torso + std::clamp(goal - s.joints.torso, -cap, cap);
    s.joints.torso_velocity = (next - s.joints.torso) / dt;
    s.joints.torso = next;
  }

  apply_grasp_constraints(s, spec);

  const auto gripper = [&](Hand hand, const std::optional<double>& target, double& level) {
    if (!target) return;
    const double next = std::clamp(*target, 0.0, 1.0);
    const bool was_closed = level >= kGripperClosedLevel;
    const bool closed = next >= kGripperClosedLevel;
    level = next;
    if (closed != was_closed) s = set_grasp(s, spec, hand, closed);
  };
  if (spec.left_arm) gripper(Hand::left, cmd.left_gripper, s.left_gripper);
  if (spec.right_arm) gripper(Hand::right, cmd.right_gripper, s.right_gripper);
  return s;
}

}  // namespace mmteleop
