#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mmteleop/action.hpp"
#include "mmteleop/input_event.hpp"

namespace mmteleop {

/// Tuning shared by all device parsers. Not every parser reads every field.
struct ParserConfig {
  double translation_gain = 1.0;   // m per m (tracked) or m per tick (keys / axes)
  double rotation_gain = 1.0;      // rad per rad (tracked) or rad per tick (keys / axes)
  double base_linear_gain = 1.0;   // m/s per unit input
  double base_angular_gain = 1.0;  // rad/s per unit input
  double torso_rate_gain = 0.5;    // normalized height per second at full deflection
  double deadband = 0.05;
  double smoothing = 0.6;          // exponential smoothing factor alpha, 1 = raw input
  double confidence_threshold = 0.5;
  std::optional<int> clutch_button;
  double tick_period_s = 0.05;
  double torso_initial = 0.5;      // starting target for rate-integrated torso commands
  /// Rotation taking device-frame displacements into the robot base frame.
  Eigen::Quaterniond frame_rotation = Eigen::Quaterniond::Identity();
  BaseVelocityLimits base_limits;

  // 6-DoF puck buttons
  int mode_button = 0;
  int gripper_button = 1;

  // vision calibration
  bool auto_calibrate = true;
  double calibration_duration_s = 1.0;
  double torso_travel = 0.4;  // hip-to-ankle travel from standing (max) to crouched (min), m

  /// Throws ConfigError when alpha is outside [0,1] or a gain is not positive.
  void validate() const;
};

/// Base class for device parsers. A parser consumes the events of exactly one
/// device and produces one PartialCommand per control tick. Output is a pure
/// function of the configuration and the event sequence so sessions replay.
class Parser {
 public:
  Parser(std::string device_id, ParserConfig cfg);
  virtual ~Parser() = default;

  Parser(const Parser&) = delete;
  Parser& operator=(const Parser&) = delete;

  const std::string& device_id() const noexcept { return device_id_; }
  const ParserConfig& config() const noexcept { return cfg_; }

  /// Fields this device type can produce.
  virtual std::set<BodyPart> capabilities() const = 0;

  /// Restricts output to a subset of the capabilities (default: all).
  void set_controlled(std::set<BodyPart> parts) { controlled_ = std::move(parts); }
  const std::set<BodyPart>& controlled() const noexcept { return controlled_; }

  /// Events for other devices are ignored.
  void consume(const InputEvent& event);

  /// Produces the partial for this tick: fields outside the controlled set
  /// are stripped, remaining fields are tagged with the device id.
  PartialCommand tick(TimestampUs now);

 protected:
  virtual void on_event(const InputEvent& event) = 0;
  virtual PartialCommand on_tick(TimestampUs now) = 0;

  ParserConfig cfg_;

 private:
  std::string device_id_;
  std::set<BodyPart> controlled_;
  bool controlled_set_ = false;
};

// ---------------------------------------------------------------------------
// Keyboard

struct KeyBinding {
  BodyPart part = BodyPart::base;
  /// base: 0 vx, 1 vy, 2 wz. arms: 0..2 translation x,y,z, 3..5 rotation x,y,z.
  /// grippers and torso ignore the axis.
  int axis = 0;
  int sign = 1;
};

using Keymap = std::map<std::string, KeyBinding>;

/// Builds a keymap, rejecting duplicate keys and malformed bindings with
/// ConfigError.
Keymap make_keymap(const std::vector<std::pair<std::string, KeyBinding>>& bindings);

/// Each key drives a single DoF. While held, velocity fields get gain * sign,
/// pose fields get gain * sign as a per-tick delta, grippers go closed (sign
/// > 0) or open, and the torso target moves at torso_rate_gain. A key pressed
/// and released between two ticks counts as held for the next tick.
class KeyboardParser final : public Parser {
 public:
  KeyboardParser(std::string device_id, ParserConfig cfg, Keymap keymap);

  std::set<BodyPart> capabilities() const override;

 protected:
  void on_event(const InputEvent& event) override;
  PartialCommand on_tick(TimestampUs now) override;

 private:
  Keymap keymap_;
  std::set<std::string> held_;
  std::set<std::string> tapped_;
  double torso_target_;
};

// ---------------------------------------------------------------------------
// 6-DoF puck (spacemouse)

enum class SixDofMode : std::uint8_t { left_arm, right_arm, base, torso };

/// Mode-switching 6-axis device. The mode button cycles left arm -> right arm
/// -> base -> torso. Arm modes map the six axes to a delta pose; base mode
/// maps axes (0, 1, 5) to (vx, vy, wz); torso mode maps axis 2 to a torso
/// rate. The gripper button toggles the gripper of the active arm.
class SixDofParser final : public Parser {
 public:
  SixDofParser(std::string device_id, ParserConfig cfg);

  std::set<BodyPart> capabilities() const override;
  SixDofMode mode() const noexcept { return mode_; }

 protected:
  void on_event(const InputEvent& event) override;
  PartialCommand on_tick(TimestampUs now) override;

 private:
  std::array<double, 6> axes_{};
  std::map<int, bool> buttons_;
  SixDofMode mode_ = SixDofMode::left_arm;
  double left_gripper_ = 0.0;
  double right_gripper_ = 0.0;
  double torso_target_;
};

// ---------------------------------------------------------------------------
// VR controllers

/// Joystick and trigger axis assignment for the VR parser.
namespace vr_axis {
inline constexpr int kBaseVx = 0;
inline constexpr int kBaseVy = 1;
inline constexpr int kBaseWz = 2;
inline constexpr int kTorsoRate = 3;
inline constexpr int kLeftTrigger = 4;
inline constexpr int kRightTrigger = 5;
}  // namespace vr_axis

/// Tracked hand poses become per-tick delta poses while the clutch is
/// engaged. Without a clutch button configured the hands are always engaged;
/// with one configured, hand deltas stay suppressed until its state is known.
class VrParser final : public Parser {
 public:
  VrParser(std::string device_id, ParserConfig cfg);

  std::set<BodyPart> capabilities() const override;

 protected:
  void on_event(const InputEvent& event) override;
  PartialCommand on_tick(TimestampUs now) override;

 private:
  bool engaged() const;

  struct HandTrack {
    std::optional<Pose> latest;
    std::optional<Pose> anchor;  // pose consumed at the previous tick
  };
  std::array<HandTrack, 2> hands_;
  std::array<double, 6> axes_{};
  std::array<bool, 6> axis_seen_{};
  std::optional<bool> clutch_;
  double torso_target_;
};

// ---------------------------------------------------------------------------
// Vision (skeleton keypoints)

struct TorsoCalibration {
  double hip_ankle_min = 0.0;
  double hip_ankle_max = 0.0;
};

/// Whole-body mapping from skeleton keypoints:
///   base  <- smoothed hip-center planar velocity and hip yaw rate
///   torso <- hip-to-ankle-midpoint distance normalized by the calibration
///   arms  <- palm pose relative to the hip frame, differenced per frame
/// Base and torso need a calibration, either given or captured from the
/// first calibration_duration_s of frames with the operator standing still.
class VisionParser final : public Parser {
 public:
  VisionParser(std::string device_id, ParserConfig cfg,
               std::optional<TorsoCalibration> calibration = std::nullopt);

  std::set<BodyPart> capabilities() const override;
  const std::optional<TorsoCalibration>& calibration() const noexcept { return calibration_; }

 protected:
  void on_event(const InputEvent& event) override;
  PartialCommand on_tick(TimestampUs now) override;

 private:
  void on_frame(TimestampUs t, const KeypointFrame& raw);
  bool engaged() const;

  struct Smoothed {
    Eigen::Vector3d hip_center;
    double hip_yaw;
    Pose left_palm;
    Pose right_palm;
    Eigen::Vector3d left_ankle;
    Eigen::Vector3d right_ankle;
  };

  std::optional<TorsoCalibration> calibration_;
  std::optional<TimestampUs> calibration_start_;
  double calibration_sum_ = 0.0;
  int calibration_count_ = 0;

  std::optional<Smoothed> smoothed_;
  std::optional<TimestampUs> last_frame_time_;
  std::optional<Eigen::Vector3d> prev_hip_;
  std::optional<double> prev_yaw_;
  std::array<std::optional<Pose>, 2> prev_palm_rel_;
  std::optional<bool> clutch_;

  // accumulated since the last tick
  bool have_output_ = false;
  std::optional<BaseVelocity> pending_base_;
  std::optional<double> pending_torso_;
  std::array<std::optional<DeltaPose>, 2> pending_arm_;
};

}  // namespace mmteleop
