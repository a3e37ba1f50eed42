#include "mmteleop/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mmteleop {

namespace {

constexpr double kEps = 1e-12;

std::optional<RayHit> hit_sphere(double r, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  const double a = d.squaredNorm();
  const double b = o.dot(d);
  const double c = o.squaredNorm() - r * r;
  const double disc = b * b - a * c;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  double t = (-b - sq) / a;
  if (t <= kEps) t = (-b + sq) / a;
  if (t <= kEps) return std::nullopt;
  return RayHit{t, (o + t * d).normalized()};
}

std::optional<RayHit> hit_box(const Eigen::Vector3d& size, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  const Eigen::Vector3d h = size / 2.0;
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  int axis0 = 0, axis1 = 0;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d[i]) < kEps) {
      if (o[i] < -h[i] || o[i] > h[i]) return std::nullopt;
      continue;
    }
    double a = (-h[i] - o[i]) / d[i];
    double b = (h[i] - o[i]) / d[i];
    if (a > b) std::swap(a, b);
    if (a > t0) {
      t0 = a;
      axis0 = i;
    }
    if (b < t1) {
      t1 = b;
      axis1 = i;
    }
    if (t0 > t1) return std::nullopt;
  }
  double t = t0;
  int axis = axis0;
  if (t <= kEps) {
    t = t1;
    axis = axis1;
  }
  if (t <= kEps) return std::nullopt;
  Eigen::Vector3d n = Eigen::Vector3d::Zero();
  n[axis] = (o[axis] + t * d[axis]) >= 0.0 ? 1.0 : -1.0;
  return RayHit{t, n};
}

std::optional<RayHit> hit_cylinder(double r, double height, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  const double hz = height / 2.0;
  std::optional<RayHit> best;
  const auto consider = [&](double t, const Eigen::Vector3d& n) {
    if (t > kEps && (!best || t < best->t)) best = RayHit{t, n};
  };
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a > kEps) {
    const double b = o.x() * d.x() + o.y() * d.y();
    const double c = o.x() * o.x() + o.y() * o.y() - r * r;
    const double disc = b * b - a * c;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double t : {(-b - sq) / a, (-b + sq) / a}) {
        const Eigen::Vector3d p = o + t * d;
        if (std::abs(p.z()) <= hz) consider(t, Eigen::Vector3d(p.x(), p.y(), 0.0).normalized());
      }
    }
  }
  if (std::abs(d.z()) > kEps) {
    for (double zc : {-hz, hz}) {
      const double t = (zc - o.z()) / d.z();
      const Eigen::Vector3d p = o + t * d;
      if (p.x() * p.x() + p.y() * p.y() <= r * r) consider(t, Eigen::Vector3d(0.0, 0.0, zc > 0 ? 1.0 : -1.0));
    }
  }
  return best;
}

}  // namespace

std::optional<RayHit> intersect(const SceneObject& object, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) {
  const Eigen::Isometry3d inv = object.pose.inverse().isometry();
  const Eigen::Vector3d o = inv * origin;
  const Eigen::Vector3d d = inv.linear() * dir;
  std::optional<RayHit> h;
  switch (object.shape.type) {
    case ShapeType::sphere:
      h = hit_sphere(object.shape.radius, o, d);
      break;
    case ShapeType::box:
      h = hit_box(object.shape.size, o, d);
      break;
    case ShapeType::cylinder:
      h = hit_cylinder(object.shape.radius, object.shape.height, o, d);
      break;
  }
  if (h) h->normal = object.pose.orientation() * h->normal;
  return h;
}

Pose camera_in_world(const CameraMount& cam, const WorldState& state) {
  const Pose parent = cam.parent == MountParent::base ? base_pose3d(state.base)
                                                      : base_pose3d(state.base) * torso_in_base(state.joints);
  return parent * cam.transform;
}

Eigen::Vector3d pixel_ray(const CameraMount& cam, int u, int v) {
  const double f = (cam.height / 2.0) / std::tan(cam.vfov_deg * std::numbers::pi / 360.0);
  const double du = (u + 0.5) - cam.width / 2.0;
  const double dv = (v + 0.5) - cam.height / 2.0;
  return {1.0, -du / f, -dv / f};
}

OdometryDelta odometry_delta(const BasePose2d& prev, const BasePose2d& cur) {
  const double c = std::cos(prev.theta), s = std::sin(prev.theta);
  const double dx = cur.x - prev.x, dy = cur.y - prev.y;
  return {c * dx + s * dy, -s * dx + c * dy, wrap_angle(cur.theta - prev.theta)};
}

ObservationFrame Renderer::render(const WorldState& state, const EmbodimentSpec& spec) {
  ObservationFrame f;
  f.sim_time = state.sim_time;
  f.left_ee = hand_in_base(spec, state, Hand::left);
  f.right_ee = hand_in_base(spec, state, Hand::right);
  f.left_gripper = state.left_gripper;
  f.right_gripper = state.right_gripper;
  if (previous_) f.base_odom_delta = odometry_delta(*previous_, state.base);
  previous_ = state.base;

  if (!options_.images) return f;
  for (const CameraMount& cam : spec.cameras) {
    const Pose pose = camera_in_world(cam, state);
    const Eigen::Matrix3d R = pose.orientation().toRotationMatrix();
    const Eigen::Vector3d origin = pose.position();
    RgbImage rgb{cam.id, static_cast<std::uint16_t>(cam.width), static_cast<std::uint16_t>(cam.height), {}};
    DepthImage depth{cam.id, rgb.width, rgb.height, {}};
    rgb.data.resize(static_cast<std::size_t>(cam.width) * cam.height * 3);
    depth.data.assign(static_cast<std::size_t>(cam.width) * cam.height, 0);
    for (int v = 0; v < cam.height; ++v) {
      for (int u = 0; u < cam.width; ++u) {
        const Eigen::Vector3d dir = R * pixel_ray(cam, u, v);
        const SceneObject* hit_obj = nullptr;
        RayHit best{std::numeric_limits<double>::infinity(), Eigen::Vector3d::Zero()};
        for (const SceneObject& o : state.objects) {
          if (auto h = intersect(o, origin, dir); h && h->t < best.t) {
            best = *h;
            hit_obj = &o;
          }
        }
        const std::size_t idx = static_cast<std::size_t>(v) * cam.width + u;
        std::array<std::uint8_t, 3> color = options_.background;
        if (hit_obj != nullptr) {
          const double mm = std::round(best.t * 1000.0);
          depth.data[idx] = mm >= 1.0 && mm <= 65535.0 ? static_cast<std::uint16_t>(mm) : 0;
          const double shade = 0.3 + 0.7 * std::max(0.0, best.normal.dot(options_.light_direction));
          for (int c = 0; c < 3; ++c) {
            color[c] = static_cast<std::uint8_t>(std::clamp(std::round(hit_obj->color[c] * shade), 0.0, 255.0));
          }
        }
        std::copy(color.begin(), color.end(), rgb.data.begin() + static_cast<std::ptrdiff_t>(idx * 3));
      }
    }
    f.rgb.push_back(std::move(rgb));
    f.depth.push_back(std::move(depth));
  }
  return f;
}

}  // namespace mmteleop
