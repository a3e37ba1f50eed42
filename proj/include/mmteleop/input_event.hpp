#pragma once

#include <string>
#include <variant>

#include "mmteleop/action.hpp"
#include "mmteleop/pose.hpp"

namespace mmteleop {

enum class Hand : std::uint8_t { left, right };

struct KeyEvent {
  std::string code;
  bool pressed = false;
};

struct AxisEvent {
  int index = 0;
  double value = 0.0;  // [-1, 1]
};

struct TrackedPoseEvent {
  Hand hand = Hand::left;
  Pose pose;
};

struct ButtonEvent {
  int index = 0;
  bool pressed = false;
};

struct KeypointConfidence {
  double hip = 1.0;
  double left_palm = 1.0;
  double right_palm = 1.0;
  double left_ankle = 1.0;
  double right_ankle = 1.0;
};

/// Skeleton keypoints extracted upstream from one RGB-D frame.
///
/// Positions are metric with absolute depth, expressed in an operator-aligned
/// frame: x forward, y left, z up. Hip yaw is the heading of the hip line
/// about z.
struct KeypointFrame {
  Eigen::Vector3d hip_center = Eigen::Vector3d::Zero();
  double hip_yaw = 0.0;
  Pose left_palm;
  Pose right_palm;
  Eigen::Vector3d left_ankle = Eigen::Vector3d::Zero();
  Eigen::Vector3d right_ankle = Eigen::Vector3d::Zero();
  KeypointConfidence confidence;
};

using EventPayload = std::variant<KeyEvent, AxisEvent, TrackedPoseEvent, ButtonEvent, KeypointFrame>;

struct InputEvent {
  std::string device_id;
  TimestampUs timestamp_us = 0;
  EventPayload payload;

  static InputEvent key(std::string device, TimestampUs t, std::string code, bool pressed) {
    return {std::move(device), t, KeyEvent{std::move(code), pressed}};
  }
  /// Values outside [-1, 1] are clamped.
  static InputEvent axis(std::string device, TimestampUs t, int index, double value);
  static InputEvent tracked_pose(std::string device, TimestampUs t, Hand hand, const Pose& pose) {
    return {std::move(device), t, TrackedPoseEvent{hand, pose}};
  }
  static InputEvent button(std::string device, TimestampUs t, int index, bool pressed) {
    return {std::move(device), t, ButtonEvent{index, pressed}};
  }
  static InputEvent keypoints(std::string device, TimestampUs t, const KeypointFrame& frame) {
    return {std::move(device), t, frame};
  }
};

}  // namespace mmteleop
