#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "mmteleop/bytes.hpp"
#include "mmteleop/pose.hpp"

namespace mmteleop {

/// Monotonic time in microseconds.
using TimestampUs = std::int64_t;

struct BaseVelocityLimits {
  double linear = 1.0;   // m/s, applies to vx and vy
  double angular = 1.5;  // rad/s
};

/// Planar base twist in the robot frame: vx forward, vy lateral (m/s), wz yaw (rad/s).
struct BaseVelocity {
  double vx = 0.0;
  double vy = 0.0;
  double wz = 0.0;

  BaseVelocity clamped(const BaseVelocityLimits& limits = {}) const;
  bool operator==(const BaseVelocity&) const = default;
};

/// A command field together with the device it came from.
template <typename T>
struct Sourced {
  T value{};
  std::string source;

  bool operator==(const Sourced&) const = default;
};

/// The unified whole-body command. Every field is optional; present fields
/// always carry the id of the device that produced them.
struct ActionCommand {
  std::optional<Sourced<DeltaPose>> left_arm;
  std::optional<Sourced<DeltaPose>> right_arm;
  std::optional<Sourced<double>> left_gripper;   // [0,1], 1 = closed
  std::optional<Sourced<double>> right_gripper;
  std::optional<Sourced<BaseVelocity>> base;
  std::optional<Sourced<double>> torso;          // normalized height target in [0,1]
  TimestampUs timestamp_us = 0;

  bool empty() const noexcept {
    return !left_arm && !right_arm && !left_gripper && !right_gripper && !base && !torso;
  }
  bool operator==(const ActionCommand&) const = default;
};

/// Addressable command fields, used by assignment tables and embodiment filters.
enum class BodyPart : std::uint8_t { left_arm, right_arm, left_gripper, right_gripper, base, torso };

inline constexpr std::array<BodyPart, 6> kAllBodyParts = {
    BodyPart::left_arm, BodyPart::right_arm, BodyPart::left_gripper,
    BodyPart::right_gripper, BodyPart::base, BodyPart::torso};

const char* to_string(BodyPart part);
/// Throws ConfigError on unknown names.
BodyPart parse_body_part(const std::string& name);

bool has_part(const ActionCommand& cmd, BodyPart part);
/// Source tag of a present field, nullptr if absent.
const std::string* part_source(const ActionCommand& cmd, BodyPart part);
void copy_part(const ActionCommand& from, ActionCommand& to, BodyPart part);
void clear_part(ActionCommand& cmd, BodyPart part);

/// A parser's per-tick output. Same shape as the full command; only the
/// fields the parser controls are ever present.
using PartialCommand = ActionCommand;

/// Flat action layout used for datasets, the wire and disk:
///   [0,3) left translation   [3,6) left rotation vector   [6] left gripper
///   [7,10) right translation [10,13) right rotation vector [13] right gripper
///   [14] vx  [15] vy  [16] wz
/// Torso is not part of the flat vector.
using ActionVector17 = std::array<float, 17>;

namespace action_index {
inline constexpr std::size_t kLeftTranslation = 0;
inline constexpr std::size_t kLeftRotation = 3;
inline constexpr std::size_t kLeftGripper = 6;
inline constexpr std::size_t kRightTranslation = 7;
inline constexpr std::size_t kRightRotation = 10;
inline constexpr std::size_t kRightGripper = 13;
inline constexpr std::size_t kBaseVx = 14;
inline constexpr std::size_t kBaseVy = 15;
inline constexpr std::size_t kBaseWz = 16;
}  // namespace action_index

inline constexpr const char* kVectorSource = "vector";

ActionVector17 flatten(const ActionCommand& cmd);

/// All fields present, tagged with source "vector". Throws DimensionError
/// unless `v` has exactly 17 entries.
ActionCommand unflatten(std::span<const float> v);

/// 17 x f32 little-endian, 68 bytes.
void write_action_vector(ByteWriter& w, const ActionVector17& v);
ActionVector17 read_action_vector(ByteReader& r);

}  // namespace mmteleop
