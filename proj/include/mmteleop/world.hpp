#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mmteleop/bytes.hpp"
#include "mmteleop/input_event.hpp"
#include "mmteleop/pose.hpp"
#include "mmteleop/robot_interface.hpp"

namespace mmteleop {

/// Planar base pose in the world frame.
struct BasePose2d {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  bool operator==(const BasePose2d&) const = default;
};

enum class ShapeType : std::uint8_t { box, sphere, cylinder };

/// Primitive shape in its local frame, centered at the origin. Boxes use
/// full edge lengths; cylinders run along local z.
struct Shape {
  ShapeType type = ShapeType::box;
  Eigen::Vector3d size = Eigen::Vector3d::Zero();  // box: (lx, ly, lz)
  double radius = 0.0;                             // sphere, cylinder
  double height = 0.0;                             // cylinder

  bool operator==(const Shape&) const = default;
};

/// Distance from a point (shape-local frame) to the shape surface, 0 inside.
double surface_distance(const Shape& shape, const Eigen::Vector3d& local_point);

struct SceneObject {
  std::string id;
  Shape shape;
  Pose pose;  // world frame
  bool graspable = false;
  std::array<std::uint8_t, 3> color{200, 200, 200};

  bool operator==(const SceneObject&) const = default;
};

struct GraspConstraint {
  std::string object_id;
  Pose relative;  // object pose in the hand frame

  bool operator==(const GraspConstraint&) const = default;
};

struct WorldState {
  BasePose2d base;
  JointState joints;
  double left_gripper = 0.0;
  double right_gripper = 0.0;
  std::vector<SceneObject> objects;
  std::array<std::optional<GraspConstraint>, 2> grasps;  // indexed by Hand
  double sim_time = 0.0;

  SceneObject* find(const std::string& id);
  const SceneObject* find(const std::string& id) const;
  const std::optional<GraspConstraint>& grasp(Hand hand) const { return grasps[static_cast<int>(hand)]; }
};

/// Canonical little-endian serialization: every double as f64, every vector
/// prefixed by a u32 count, strings by a u32 length. See docs/episode_format.md.
Bytes serialize_world(const WorldState& state);

/// 64-bit FNV-1a over serialize_world(state).
std::uint64_t world_hash(const WorldState& state);
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

/// Base pose as a 3D transform (z = 0).
Pose base_pose3d(const BasePose2d& base);

/// Torso frame in the base frame (raised by the torso position).
Pose torso_in_base(const JointState& joints);

/// End-effector pose of a hand in the base / world frame; nullopt if the
/// embodiment has no such arm.
std::optional<Pose> hand_in_base(const EmbodimentSpec& spec, const WorldState& state, Hand hand);
std::optional<Pose> hand_in_world(const EmbodimentSpec& spec, const WorldState& state, Hand hand);

}  // namespace mmteleop
