#include "mmteleop/action.hpp"

#include <algorithm>

namespace mmteleop {

BaseVelocity BaseVelocity::clamped(const BaseVelocityLimits& limits) const {
  return {std::clamp(vx, -limits.linear, limits.linear), std::clamp(vy, -limits.linear, limits.linear),
          std::clamp(wz, -limits.angular, limits.angular)};
}

namespace {

void put_delta(ActionVector17& v, std::size_t offset, const DeltaPose& d) {
  for (int i = 0; i < 3; ++i) {
    v[offset + i] = static_cast<float>(d.translation()[i]);
    v[offset + 3 + i] = static_cast<float>(d.rotation()[i]);
  }
}

DeltaPose get_delta(std::span<const float> v, std::size_t offset) {
  return {Eigen::Vector3d(v[offset], v[offset + 1], v[offset + 2]),
          Eigen::Vector3d(v[offset + 3], v[offset + 4], v[offset + 5])};
}

}  // namespace

ActionVector17 flatten(const ActionCommand& cmd) {
  using namespace action_index;
  ActionVector17 v{};
  if (cmd.left_arm) put_delta(v, kLeftTranslation, cmd.left_arm->value);
  if (cmd.right_arm) put_delta(v, kRightTranslation, cmd.right_arm->value);
  if (cmd.left_gripper) v[kLeftGripper] = static_cast<float>(cmd.left_gripper->value);
  if (cmd.right_gripper) v[kRightGripper] = static_cast<float>(cmd.right_gripper->value);
  if (cmd.base) {
    v[kBaseVx] = static_cast<float>(cmd.base->value.vx);
    v[kBaseVy] = static_cast<float>(cmd.base->value.vy);
    v[kBaseWz] = static_cast<float>(cmd.base->value.wz);
  }
  return v;
}

ActionCommand unflatten(std::span<const float> v) {
  using namespace action_index;
  if (v.size() != 17) {
    throw DimensionError("action vector must have 17 entries, got " + std::to_string(v.size()));
  }
  ActionCommand cmd;
  cmd.left_arm = Sourced<DeltaPose>{get_delta(v, kLeftTranslation), kVectorSource};
  cmd.right_arm = Sourced<DeltaPose>{get_delta(v, kRightTranslation), kVectorSource};
  cmd.left_gripper = Sourced<double>{v[kLeftGripper], kVectorSource};
  cmd.right_gripper = Sourced<double>{v[kRightGripper], kVectorSource};
  cmd.base = Sourced<BaseVelocity>{{v[kBaseVx], v[kBaseVy], v[kBaseWz]}, kVectorSource};
  return cmd;
}

void write_action_vector(ByteWriter& w, const ActionVector17& v) {
  for (float x : v) w.f32(x);
}

ActionVector17 read_action_vector(ByteReader& r) {
  ActionVector17 v{};
  for (float& x : v) x = r.f32();
  return v;
}

}  // namespace mmteleop

namespace mmteleop {

const char* to_string(BodyPart part) {
  switch (part) {
    case BodyPart::left_arm: return "left_arm";
    case BodyPart::right_arm: return "right_arm";
    case BodyPart::left_gripper: return "left_gripper";
    case BodyPart::right_gripper: return "right_gripper";
    case BodyPart::base: return "base";
    case BodyPart::torso: return "torso";
  }
  return "?";
}

BodyPart parse_body_part(const std::string& name) {
  for (BodyPart p : kAllBodyParts) {
    if (name == to_string(p)) return p;
  }
  throw ConfigError("unknown body part '" + name + "'");
}

namespace {

template <typename F>
decltype(auto) visit_part(ActionCommand& cmd, BodyPart part, F&& f) {
  switch (part) {
    case BodyPart::left_arm: return f(cmd.left_arm);
    case BodyPart::right_arm: return f(cmd.right_arm);
    case BodyPart::left_gripper: return f(cmd.left_gripper);
    case BodyPart::right_gripper: return f(cmd.right_gripper);
    case BodyPart::base: return f(cmd.base);
    case BodyPart::torso: break;
  }
  return f(cmd.torso);
}

}  // namespace

bool has_part(const ActionCommand& cmd, BodyPart part) {
  return part_source(cmd, part) != nullptr;
}

const std::string* part_source(const ActionCommand& cmd, BodyPart part) {
  auto& mut = const_cast<ActionCommand&>(cmd);
  return visit_part(mut, part, [](auto& field) -> const std::string* {
    return field ? &field->source : nullptr;
  });
}

void copy_part(const ActionCommand& from, ActionCommand& to, BodyPart part) {
  switch (part) {
    case BodyPart::left_arm: to.left_arm = from.left_arm; break;
    case BodyPart::right_arm: to.right_arm = from.right_arm; break;
    case BodyPart::left_gripper: to.left_gripper = from.left_gripper; break;
    case BodyPart::right_gripper: to.right_gripper = from.right_gripper; break;
    case BodyPart::base: to.base = from.base; break;
    case BodyPart::torso: to.torso = from.torso; break;
  }
}

void clear_part(ActionCommand& cmd, BodyPart part) {
  visit_part(cmd, part, [](auto& field) { field.reset(); });
}

}  // namespace mmteleop
