#pragma once

// Small helpers that turn yaml-cpp failures into ConfigError with the
// offending node's 1-based line number.

#include <yaml-cpp/yaml.h>

#include <string>
#include <vector>

#include "mmteleop/errors.hpp"
#include "mmteleop/pose.hpp"

namespace mmteleop::yaml {

inline int line_of(const YAML::Node& n) { return n.Mark().is_null() ? 0 : n.Mark().line + 1; }

inline YAML::Node parse(const std::string& text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("YAML syntax error: " + e.msg, e.mark.is_null() ? 0 : e.mark.line + 1);
  }
}

inline YAML::Node load_file(const std::string& path) {
  try {
    return YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw ConfigError("cannot open '" + path + "'");
  } catch (const YAML::Exception& e) {
    throw ConfigError(path + ": YAML syntax error: " + e.msg, e.mark.is_null() ? 0 : e.mark.line + 1);
  }
}

inline YAML::Node require(const YAML::Node& parent, const std::string& key) {
  if (!parent.IsMap()) throw ConfigError("expected a mapping", line_of(parent));
  YAML::Node n = parent[key];
  if (!n) throw ConfigError("missing required key '" + key + "'", line_of(parent));
  return n;
}

template <typename T>
T as(const YAML::Node& n, const std::string& what) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("invalid value for '" + what + "'", line_of(n));
  }
}

template <typename T>
T get(const YAML::Node& parent, const std::string& key) {
  return as<T>(require(parent, key), key);
}

template <typename T>
T get_or(const YAML::Node& parent, const std::string& key, T fallback) {
  if (!parent.IsMap() || !parent[key]) return fallback;
  return as<T>(parent[key], key);
}

inline Eigen::Vector3d vec3(const YAML::Node& n, const std::string& what) {
  if (!n.IsSequence() || n.size() != 3) throw ConfigError("'" + what + "' must be a 3-element list", line_of(n));
  return {as<double>(n[0], what), as<double>(n[1], what), as<double>(n[2], what)};
}

inline std::vector<double> doubles(const YAML::Node& n, const std::string& what) {
  if (!n.IsSequence()) throw ConfigError("'" + what + "' must be a list", line_of(n));
  std::vector<double> out;
  for (const auto& x : n) out.push_back(as<double>(x, what));
  return out;
}

/// Roll-pitch-yaw, applied as R = Rz(yaw) * Ry(pitch) * Rx(roll).
inline Eigen::Quaterniond rpy(const Eigen::Vector3d& r) {
  return Eigen::Quaterniond(Eigen::AngleAxisd(r.z(), Eigen::Vector3d::UnitZ()) *
                            Eigen::AngleAxisd(r.y(), Eigen::Vector3d::UnitY()) *
                            Eigen::AngleAxisd(r.x(), Eigen::Vector3d::UnitX()));
}

/// {xyz: [..], rpy: [..]}, both optional.
inline Pose transform(const YAML::Node& n, const std::string& what) {
  if (!n) return {};
  if (!n.IsMap()) throw ConfigError("'" + what + "' must be a mapping with xyz/rpy", line_of(n));
  const Eigen::Vector3d xyz = n["xyz"] ? vec3(n["xyz"], what + ".xyz") : Eigen::Vector3d::Zero();
  const Eigen::Vector3d r = n["rpy"] ? vec3(n["rpy"], what + ".rpy") : Eigen::Vector3d::Zero();
  return {xyz, rpy(r)};
}

}  // namespace mmteleop::yaml
