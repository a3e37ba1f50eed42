#include "mmteleop/world.hpp"

#include <algorithm>
#include <cmath>

namespace mmteleop {

double surface_distance(const Shape& shape, const Eigen::Vector3d& p) {
  switch (shape.type) {
    case ShapeType::sphere:
      return std::max(0.0, p.norm() - shape.radius);
    case ShapeType::box: {
      const Eigen::Vector3d d = (p.cwiseAbs() - shape.size / 2.0).cwiseMax(0.0);
      return d.norm();
    }
    case ShapeType::cylinder: {
      const double radial = std::max(0.0, std::hypot(p.x(), p.y()) - shape.radius);
      const double axial = std::max(0.0, std::abs(p.z()) - shape.height / 2.0);
      return std::hypot(radial, axial);
    }
  }
  return 0.0;
}

SceneObject* WorldState::find(const std::string& id) {
  auto it = std::find_if(objects.begin(), objects.end(), [&](const SceneObject& o) { return o.id == id; });
  return it == objects.end() ? nullptr : &*it;
}

const SceneObject* WorldState::find(const std::string& id) const {
  return const_cast<WorldState*>(this)->find(id);
}

namespace {

void put_vector(ByteWriter& w, const Eigen::VectorXd& v) {
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) w.f64(v[i]);
}

void put_pose(ByteWriter& w, const Pose& p) {
  w.f64(p.position().x());
  w.f64(p.position().y());
  w.f64(p.position().z());
  w.f64(p.orientation().w());
  w.f64(p.orientation().x());
  w.f64(p.orientation().y());
  w.f64(p.orientation().z());
}

}  // namespace

Bytes serialize_world(const WorldState& s) {
  Bytes out;
  ByteWriter w(out);
  w.f64(s.sim_time);
  w.f64(s.base.x);
  w.f64(s.base.y);
  w.f64(s.base.theta);
  put_vector(w, s.joints.left_arm);
  put_vector(w, s.joints.right_arm);
  w.f64(s.joints.torso);
  put_vector(w, s.joints.left_arm_velocity);
  put_vector(w, s.joints.right_arm_velocity);
  w.f64(s.joints.torso_velocity);
  w.f64(s.left_gripper);
  w.f64(s.right_gripper);
  w.u32(static_cast<std::uint32_t>(s.objects.size()));
  for (const SceneObject& o : s.objects) {
    w.long_string(o.id);
    put_pose(w, o.pose);
  }
  for (const auto& g : s.grasps) {
    w.u8(g ? 1 : 0);
    if (g) {
      w.long_string(g->object_id);
      put_pose(w, g->relative);
    }
  }
  return out;
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t world_hash(const WorldState& state) { return fnv1a64(serialize_world(state)); }

Pose base_pose3d(const BasePose2d& base) {
  return {Eigen::Vector3d(base.x, base.y, 0.0),
          Eigen::Quaterniond(Eigen::AngleAxisd(base.theta, Eigen::Vector3d::UnitZ()))};
}

Pose torso_in_base(const JointState& joints) { return Pose::from_translation(0.0, 0.0, joints.torso); }

std::optional<Pose> hand_in_base(const EmbodimentSpec& spec, const WorldState& state, Hand hand) {
  const bool left = hand == Hand::left;
  const Chain* chain = spec.arm(left);
  if (chain == nullptr) return std::nullopt;
  return torso_in_base(state.joints) * forward_kinematics(*chain, left ? state.joints.left_arm : state.joints.right_arm);
}

std::optional<Pose> hand_in_world(const EmbodimentSpec& spec, const WorldState& state, Hand hand) {
  auto p = hand_in_base(spec, state, hand);
  if (!p) return std::nullopt;
  return base_pose3d(state.base) * *p;
}

}  // namespace mmteleop
