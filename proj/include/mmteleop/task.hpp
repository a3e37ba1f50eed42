#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "mmteleop/embodiment.hpp"
#include "mmteleop/world.hpp"

namespace mmteleop {

/// Uniform randomization of an object's initial placement.
struct PlacementNoise {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // half-widths, m
  double yaw = 0.0;                                    // half-width, rad
};

struct ObjectTemplate {
  SceneObject object;
  PlacementNoise noise;
};

/// Object center inside an axis-aligned world box.
struct InsideRegion {
  std::string object_id;
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();
};

/// Object not attached to any hand.
struct NotGrasped {
  std::string object_id;
};

using TaskClause = std::variant<InsideRegion, NotGrasped>;

struct TaskSpec {
  std::string name;
  double time_limit_s = 60.0;
  BasePose2d base;
  std::vector<ObjectTemplate> objects;
  std::vector<TaskClause> success;  // conjunction
};

struct TaskStatus {
  bool success = false;
  bool done = false;
};

/// Declarative YAML format, see docs/task_format.md.
TaskSpec parse_task(const std::string& yaml_text);
TaskSpec load_task(const std::string& path);

/// Initial world: robot at its home configuration and the task's base pose,
/// objects placed with seeded uniform noise (mt19937_64, 53-bit mapping).
WorldState initial_world(const TaskSpec& task, const EmbodimentSpec& spec, std::uint64_t seed);

bool clause_holds(const TaskClause& clause, const WorldState& state);

/// success when every clause holds; done when successful or out of time.
TaskStatus check_task(const WorldState& state, const TaskSpec& task);

}  // namespace mmteleop
