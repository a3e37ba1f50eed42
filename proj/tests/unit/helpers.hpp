#pragma once

#include <cmath>
#include <random>
#include <string>

#include "mmteleop/action.hpp"
#include "mmteleop/embodiment.hpp"
#include "mmteleop/pose.hpp"
#include "mmteleop/session.hpp"

namespace testutil {

inline std::string data_path(const std::string& rel) { return std::string(MMTELEOP_SOURCE_DIR) + "/data/" + rel; }

inline const mmteleop::EmbodimentSpec& tiago() {
  static const auto spec = mmteleop::load_embodiment(data_path("embodiments/tiago_like.yaml"));
  return spec;
}

inline const mmteleop::EmbodimentSpec& fetch() {
  static const auto spec = mmteleop::load_embodiment(data_path("embodiments/fetch_like.yaml"));
  return spec;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Eigen::Vector3d random_vec(std::mt19937_64& rng, double half) {
  return {uniform(rng, -half, half), uniform(rng, -half, half), uniform(rng, -half, half)};
}

inline Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Vector3d v(n(rng), n(rng), n(rng));
  return v.normalized();
}

inline Eigen::Quaterniond random_rotation(std::mt19937_64& rng, double max_angle = M_PI) {
  return Eigen::Quaterniond(Eigen::AngleAxisd(uniform(rng, 0.0, max_angle), random_unit(rng)));
}

inline mmteleop::Pose random_pose(std::mt19937_64& rng) { return {random_vec(rng, 2.0), random_rotation(rng)}; }

/// Every field present with random values, gripper values in [0,1].
inline mmteleop::ActionCommand random_command(std::mt19937_64& rng, const std::string& src = "dev") {
  using namespace mmteleop;
  ActionCommand c;
  c.left_arm = Sourced<DeltaPose>{DeltaPose(random_vec(rng, 0.1), random_vec(rng, 0.5)), src};
  c.right_arm = Sourced<DeltaPose>{DeltaPose(random_vec(rng, 0.1), random_vec(rng, 0.5)), src};
  c.left_gripper = Sourced<double>{uniform(rng, 0, 1), src};
  c.right_gripper = Sourced<double>{uniform(rng, 0, 1), src};
  c.base = Sourced<BaseVelocity>{{uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1.5, 1.5)}, src};
  c.torso = Sourced<double>{uniform(rng, 0, 1), src};
  c.timestamp_us = static_cast<TimestampUs>(rng() % 1000000000);
  return c;
}

/// Planar chain of revolute z joints with the given link lengths along x.
inline mmteleop::Chain planar_chain(const std::vector<double>& links) {
  using namespace mmteleop;
  Chain c;
  c.name = "planar";
  double prev = 0.0;
  for (std::size_t i = 0; i < links.size(); ++i) {
    Joint j;
    j.name = "j" + std::to_string(i);
    j.axis = Eigen::Vector3d::UnitZ();
    j.origin = Pose::from_translation(prev, 0, 0);
    j.lower = -M_PI;
    j.upper = M_PI;
    j.max_velocity = 10.0;
    c.joints.push_back(j);
    prev = links[i];
  }
  c.tool = Pose::from_translation(prev, 0, 0);
  c.home = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(links.size()));
  return c;
}

inline mmteleop::Bytes from_hex(const std::string& hex) {
  mmteleop::Bytes out;
  for (std::size_t i = 0; i + 1 < hex.size(); i += 2) out.push_back(static_cast<std::uint8_t>(std::stoi(hex.substr(i, 2), nullptr, 16)));
  return out;
}

}  // namespace testutil
