#pragma once

#include <array>
#include <optional>

#include "mmteleop/embodiment.hpp"
#include "mmteleop/observation.hpp"
#include "mmteleop/world.hpp"

namespace mmteleop {

struct RenderOptions {
  std::array<std::uint8_t, 3> background{30, 34, 40};
  Eigen::Vector3d light_direction = Eigen::Vector3d(-0.3, 0.2, 0.93).normalized();  // world frame, toward the light
  bool images = true;  // false: proprioception only
};

/// Ray hit against one primitive, in world coordinates.
struct RayHit {
  double t = 0.0;  // ray parameter
  Eigen::Vector3d normal;
};

/// Nearest intersection with t > 0 of origin + t * dir, or nullopt.
std::optional<RayHit> intersect(const SceneObject& object, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir);

/// Camera pose in the world frame.
Pose camera_in_world(const CameraMount& cam, const WorldState& state);

/// Pinhole ray through the center of pixel (u, v), expressed in the camera
/// body frame with unit x component so that the ray parameter equals depth.
Eigen::Vector3d pixel_ray(const CameraMount& cam, int u, int v);

/// Synthetic RGB-D plus proprioception. Depth is the distance along the
/// optical axis in mm (0 where nothing is hit); color is flat-shaded
/// color * (0.3 + 0.7 * max(0, n . l)). Robot links are not drawn.
/// Odometry is measured against the previous call on the same renderer.
class Renderer {
 public:
  explicit Renderer(RenderOptions options = {}) : options_(options) {}

  ObservationFrame render(const WorldState& state, const EmbodimentSpec& spec);
  void reset() { previous_.reset(); }

 private:
  RenderOptions options_;
  std::optional<BasePose2d> previous_;
};

/// Base motion from `prev` to `cur`, expressed in the `prev` base frame.
OdometryDelta odometry_delta(const BasePose2d& prev, const BasePose2d& cur);

}  // namespace mmteleop
