#include "mmteleop/parsers.hpp"

#include <algorithm>
#include <cmath>

#include "mmteleop/errors.hpp"

namespace mmteleop {

InputEvent InputEvent::axis(std::string device, TimestampUs t, int index, double value) {
  return {std::move(device), t, AxisEvent{index, std::clamp(value, -1.0, 1.0)}};
}

void ParserConfig::validate() const {
  if (!(smoothing >= 0.0 && smoothing <= 1.0)) throw ConfigError("smoothing must be in [0,1]");
  const std::pair<const char*, double> gains[] = {
      {"translation_gain", translation_gain}, {"rotation_gain", rotation_gain},
      {"base_linear_gain", base_linear_gain}, {"base_angular_gain", base_angular_gain},
      {"torso_rate_gain", torso_rate_gain}};
  for (const auto& [name, g] : gains) {
    if (!(g > 0.0)) throw ConfigError(std::string(name) + " must be positive");
  }
  if (deadband < 0.0) throw ConfigError("deadband must be non-negative");
  if (!(tick_period_s > 0.0)) throw ConfigError("tick_period_s must be positive");
  if (confidence_threshold < 0.0 || confidence_threshold > 1.0) {
    throw ConfigError("confidence_threshold must be in [0,1]");
  }
}

namespace {

double deadband(double v, double threshold) { return std::abs(v) < threshold ? 0.0 : v; }

void stamp(ActionCommand& cmd, const std::string& source) {
  auto tag = [&](auto& field) {
    if (field) field->source = source;
  };
  tag(cmd.left_arm);
  tag(cmd.right_arm);
  tag(cmd.left_gripper);
  tag(cmd.right_gripper);
  tag(cmd.base);
  tag(cmd.torso);
}

std::optional<Sourced<DeltaPose>>& arm_field(ActionCommand& cmd, Hand hand) {
  return hand == Hand::left ? cmd.left_arm : cmd.right_arm;
}

std::optional<Sourced<double>>& gripper_field(ActionCommand& cmd, Hand hand) {
  return hand == Hand::left ? cmd.left_gripper : cmd.right_gripper;
}

}  // namespace

// ---------------------------------------------------------------------------

Parser::Parser(std::string device_id, ParserConfig cfg)
    : cfg_(std::move(cfg)), device_id_(std::move(device_id)) {
  cfg_.validate();
}

void Parser::consume(const InputEvent& event) {
  if (event.device_id != device_id_) return;
  on_event(event);
}

PartialCommand Parser::tick(TimestampUs now) {
  PartialCommand out = on_tick(now);
  const std::set<BodyPart> allowed = controlled_.empty() ? capabilities() : controlled_;
  for (BodyPart p : kAllBodyParts) {
    if (!allowed.contains(p)) clear_part(out, p);
  }
  stamp(out, device_id_);
  out.timestamp_us = now;
  return out;
}

// ---------------------------------------------------------------------------
// Keyboard

Keymap make_keymap(const std::vector<std::pair<std::string, KeyBinding>>& bindings) {
  Keymap map;
  for (const auto& [key, b] : bindings) {
    if (key.empty()) throw ConfigError("empty key code in keymap");
    if (b.sign != 1 && b.sign != -1) throw ConfigError("key '" + key + "': sign must be +1 or -1");
    const bool arm = b.part == BodyPart::left_arm || b.part == BodyPart::right_arm;
    if ((arm && (b.axis < 0 || b.axis > 5)) || (b.part == BodyPart::base && (b.axis < 0 || b.axis > 2))) {
      throw ConfigError("key '" + key + "': axis out of range for " + to_string(b.part));
    }
    if (!map.emplace(key, b).second) throw ConfigError("key '" + key + "' assigned twice in keymap");
  }
  return map;
}

KeyboardParser::KeyboardParser(std::string device_id, ParserConfig cfg, Keymap keymap)
    : Parser(std::move(device_id), std::move(cfg)),
      keymap_(std::move(keymap)),
      torso_target_(cfg_.torso_initial) {}

std::set<BodyPart> KeyboardParser::capabilities() const {
  std::set<BodyPart> parts;
  for (const auto& [key, b] : keymap_) parts.insert(b.part);
  return parts;
}

void KeyboardParser::on_event(const InputEvent& event) {
  const auto* key = std::get_if<KeyEvent>(&event.payload);
  if (key == nullptr || !keymap_.contains(key->code)) return;
  if (key->pressed) {
    held_.insert(key->code);
    tapped_.insert(key->code);
  } else {
    held_.erase(key->code);
  }
}

PartialCommand KeyboardParser::on_tick(TimestampUs) {
  std::set<std::string> active = held_;
  active.insert(tapped_.begin(), tapped_.end());
  tapped_.clear();

  PartialCommand out;
  std::optional<BaseVelocity> base;
  std::array<std::optional<std::pair<Eigen::Vector3d, Eigen::Vector3d>>, 2> arm;
  for (const auto& code : active) {
    const KeyBinding& b = keymap_.at(code);
    switch (b.part) {
      case BodyPart::base: {
        if (!base) base = BaseVelocity{};
        const double lin = cfg_.base_linear_gain * b.sign;
        if (b.axis == 0) base->vx += lin;
        if (b.axis == 1) base->vy += lin;
        if (b.axis == 2) base->wz += cfg_.base_angular_gain * b.sign;
        break;
      }
      case BodyPart::left_arm:
      case BodyPart::right_arm: {
        auto& a = arm[b.part == BodyPart::left_arm ? 0 : 1];
        if (!a) a.emplace(Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero());
        if (b.axis < 3) {
          a->first[b.axis] += cfg_.translation_gain * b.sign;
        } else {
          a->second[b.axis - 3] += cfg_.rotation_gain * b.sign;
        }
        break;
      }
      case BodyPart::left_gripper:
        out.left_gripper = Sourced<double>{b.sign > 0 ? 1.0 : 0.0, {}};
        break;
      case BodyPart::right_gripper:
        out.right_gripper = Sourced<double>{b.sign > 0 ? 1.0 : 0.0, {}};
        break;
      case BodyPart::torso:
        torso_target_ = std::clamp(torso_target_ + b.sign * cfg_.torso_rate_gain * cfg_.tick_period_s, 0.0, 1.0);
        out.torso = Sourced<double>{torso_target_, {}};
        break;
    }
  }
  if (base) out.base = Sourced<BaseVelocity>{base->clamped(cfg_.base_limits), {}};
  if (arm[0]) out.left_arm = Sourced<DeltaPose>{DeltaPose(arm[0]->first, arm[0]->second), {}};
  if (arm[1]) out.right_arm = Sourced<DeltaPose>{DeltaPose(arm[1]->first, arm[1]->second), {}};
  return out;
}

// ---------------------------------------------------------------------------
// 6-DoF puck

SixDofParser::SixDofParser(std::string device_id, ParserConfig cfg)
    : Parser(std::move(device_id), std::move(cfg)), torso_target_(cfg_.torso_initial) {}

std::set<BodyPart> SixDofParser::capabilities() const {
  return {kAllBodyParts.begin(), kAllBodyParts.end()};
}

void SixDofParser::on_event(const InputEvent& event) {
  if (const auto* axis = std::get_if<AxisEvent>(&event.payload)) {
    if (axis->index >= 0 && axis->index < 6) axes_[axis->index] = std::clamp(axis->value, -1.0, 1.0);
    return;
  }
  const auto* button = std::get_if<ButtonEvent>(&event.payload);
  if (button == nullptr) return;
  const bool rising = button->pressed && !buttons_[button->index];
  buttons_[button->index] = button->pressed;
  if (!rising) return;
  if (button->index == cfg_.mode_button) {
    mode_ = static_cast<SixDofMode>((static_cast<int>(mode_) + 1) % 4);
  } else if (button->index == cfg_.gripper_button) {
    if (mode_ == SixDofMode::left_arm) left_gripper_ = left_gripper_ > 0.5 ? 0.0 : 1.0;
    if (mode_ == SixDofMode::right_arm) right_gripper_ = right_gripper_ > 0.5 ? 0.0 : 1.0;
  }
}

PartialCommand SixDofParser::on_tick(TimestampUs) {
  std::array<double, 6> a{};
  for (int i = 0; i < 6; ++i) a[i] = deadband(axes_[i], cfg_.deadband);

  PartialCommand out;
  switch (mode_) {
    case SixDofMode::left_arm:
    case SixDofMode::right_arm: {
      const Hand hand = mode_ == SixDofMode::left_arm ? Hand::left : Hand::right;
      gripper_field(out, hand) =
          Sourced<double>{hand == Hand::left ? left_gripper_ : right_gripper_, {}};
      if (std::all_of(a.begin(), a.end(), [](double v) { return v == 0.0; })) break;
      const DeltaPose d = DeltaPose(Eigen::Vector3d(a[0], a[1], a[2]), Eigen::Vector3d(a[3], a[4], a[5]))
                              .rotated(cfg_.frame_rotation)
                              .scaled(cfg_.translation_gain, cfg_.rotation_gain);
      arm_field(out, hand) = Sourced<DeltaPose>{d, {}};
      break;
    }
    case SixDofMode::base: {
      const BaseVelocity v{a[0] * cfg_.base_linear_gain, a[1] * cfg_.base_linear_gain,
                           a[5] * cfg_.base_angular_gain};
      out.base = Sourced<BaseVelocity>{v.clamped(cfg_.base_limits), {}};
      break;
    }
    case SixDofMode::torso:
      if (a[2] != 0.0) {
        torso_target_ = std::clamp(torso_target_ + a[2] * cfg_.torso_rate_gain * cfg_.tick_period_s, 0.0, 1.0);
        out.torso = Sourced<double>{torso_target_, {}};
      }
      break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// VR

VrParser::VrParser(std::string device_id, ParserConfig cfg)
    : Parser(std::move(device_id), std::move(cfg)), torso_target_(cfg_.torso_initial) {}

std::set<BodyPart> VrParser::capabilities() const {
  return {kAllBodyParts.begin(), kAllBodyParts.end()};
}

bool VrParser::engaged() const {
  if (!cfg_.clutch_button) return true;
  return clutch_.value_or(false);
}

void VrParser::on_event(const InputEvent& event) {
  if (const auto* tp = std::get_if<TrackedPoseEvent>(&event.payload)) {
    hands_[tp->hand == Hand::left ? 0 : 1].latest = tp->pose;
  } else if (const auto* axis = std::get_if<AxisEvent>(&event.payload)) {
    if (axis->index >= 0 && axis->index < 6) {
      axes_[axis->index] = std::clamp(axis->value, -1.0, 1.0);
      axis_seen_[axis->index] = true;
    }
  } else if (const auto* button = std::get_if<ButtonEvent>(&event.payload)) {
    if (cfg_.clutch_button && button->index == *cfg_.clutch_button) clutch_ = button->pressed;
  }
}

PartialCommand VrParser::on_tick(TimestampUs) {
  PartialCommand out;
  const bool on = engaged();
  for (int h = 0; h < 2; ++h) {
    HandTrack& track = hands_[h];
    if (!track.latest) continue;
    if (on && track.anchor) {
      const DeltaPose d = compose_delta(*track.anchor, *track.latest)
                              .rotated(cfg_.frame_rotation)
                              .scaled(cfg_.translation_gain, cfg_.rotation_gain);
      arm_field(out, h == 0 ? Hand::left : Hand::right) = Sourced<DeltaPose>{d, {}};
    }
    track.anchor = track.latest;
  }

  using namespace vr_axis;
  if (axis_seen_[kBaseVx] || axis_seen_[kBaseVy] || axis_seen_[kBaseWz]) {
    const BaseVelocity v{deadband(axes_[kBaseVx], cfg_.deadband) * cfg_.base_linear_gain,
                         deadband(axes_[kBaseVy], cfg_.deadband) * cfg_.base_linear_gain,
                         deadband(axes_[kBaseWz], cfg_.deadband) * cfg_.base_angular_gain};
    out.base = Sourced<BaseVelocity>{v.clamped(cfg_.base_limits), {}};
  }
  const double rate = deadband(axes_[kTorsoRate], cfg_.deadband);
  if (axis_seen_[kTorsoRate] && rate != 0.0) {
    torso_target_ = std::clamp(torso_target_ + rate * cfg_.torso_rate_gain * cfg_.tick_period_s, 0.0, 1.0);
    out.torso = Sourced<double>{torso_target_, {}};
  }
  if (axis_seen_[kLeftTrigger]) out.left_gripper = Sourced<double>{std::clamp(axes_[kLeftTrigger], 0.0, 1.0), {}};
  if (axis_seen_[kRightTrigger]) out.right_gripper = Sourced<double>{std::clamp(axes_[kRightTrigger], 0.0, 1.0), {}};
  return out;
}

// ---------------------------------------------------------------------------
// Vision

VisionParser::VisionParser(std::string device_id, ParserConfig cfg, std::optional<TorsoCalibration> calibration)
    : Parser(std::move(device_id), std::move(cfg)), calibration_(calibration) {
  if (calibration_ && !(calibration_->hip_ankle_max > calibration_->hip_ankle_min)) {
    throw ConfigError("vision calibration requires hip_ankle_max > hip_ankle_min");
  }
}

std::set<BodyPart> VisionParser::capabilities() const {
  return {BodyPart::left_arm, BodyPart::right_arm, BodyPart::base, BodyPart::torso};
}

bool VisionParser::engaged() const {
  if (!cfg_.clutch_button) return true;
  return clutch_.value_or(false);
}

void VisionParser::on_event(const InputEvent& event) {
  if (const auto* frame = std::get_if<KeypointFrame>(&event.payload)) {
    on_frame(event.timestamp_us, *frame);
  } else if (const auto* button = std::get_if<ButtonEvent>(&event.payload)) {
    if (cfg_.clutch_button && button->index == *cfg_.clutch_button) clutch_ = button->pressed;
  }
}

void VisionParser::on_frame(TimestampUs t, const KeypointFrame& raw) {
  const double thr = cfg_.confidence_threshold;
  const bool hip_ok = raw.confidence.hip >= thr;
  const bool ankles_ok = raw.confidence.left_ankle >= thr && raw.confidence.right_ankle >= thr;
  const std::array<bool, 2> palm_ok = {raw.confidence.left_palm >= thr, raw.confidence.right_palm >= thr};

  // Exponential smoothing, s += alpha (x - s); only confident keypoints update.
  const double alpha = cfg_.smoothing;
  if (!smoothed_ || alpha == 1.0) {
    Smoothed next{raw.hip_center, raw.hip_yaw, raw.left_palm, raw.right_palm, raw.left_ankle, raw.right_ankle};
    if (smoothed_) {
      // keep the last confident value of keypoints that dropped out
      if (!hip_ok) {
        next.hip_center = smoothed_->hip_center;
        next.hip_yaw = smoothed_->hip_yaw;
      }
      if (!ankles_ok) {
        next.left_ankle = smoothed_->left_ankle;
        next.right_ankle = smoothed_->right_ankle;
      }
      if (!palm_ok[0]) next.left_palm = smoothed_->left_palm;
      if (!palm_ok[1]) next.right_palm = smoothed_->right_palm;
    }
    smoothed_ = next;
  } else {
    Smoothed& s = *smoothed_;
    if (hip_ok) {
      s.hip_center += alpha * (raw.hip_center - s.hip_center);
      s.hip_yaw += alpha * wrap_angle(raw.hip_yaw - s.hip_yaw);
    }
    if (ankles_ok) {
      s.left_ankle += alpha * (raw.left_ankle - s.left_ankle);
      s.right_ankle += alpha * (raw.right_ankle - s.right_ankle);
    }
    auto smooth_pose = [alpha](const Pose& prev, const Pose& cur) {
      return Pose(prev.position() + alpha * (cur.position() - prev.position()),
                  prev.orientation().slerp(alpha, cur.orientation()));
    };
    if (palm_ok[0]) s.left_palm = smooth_pose(s.left_palm, raw.left_palm);
    if (palm_ok[1]) s.right_palm = smooth_pose(s.right_palm, raw.right_palm);
  }
  const Smoothed& s = *smoothed_;

  const std::optional<double> dt =
      last_frame_time_ && t > *last_frame_time_ ? std::optional<double>((t - *last_frame_time_) * 1e-6) : std::nullopt;
  last_frame_time_ = t;

  const Eigen::Vector3d ankle_mid = 0.5 * (s.left_ankle + s.right_ankle);
  const double hip_ankle = (s.hip_center - ankle_mid).norm();

  if (!calibration_ && cfg_.auto_calibrate && hip_ok && ankles_ok) {
    if (!calibration_start_) calibration_start_ = t;
    if ((t - *calibration_start_) * 1e-6 < cfg_.calibration_duration_s) {
      calibration_sum_ += hip_ankle;
      ++calibration_count_;
    } else if (calibration_count_ > 0) {
      const double standing = calibration_sum_ / calibration_count_;
      calibration_ = TorsoCalibration{standing - cfg_.torso_travel, standing};
    }
  }

  have_output_ = true;

  if (calibration_ && hip_ok) {
    if (dt && prev_hip_ && prev_yaw_) {
      // planar hip velocity, expressed in the operator's hip frame
      const Eigen::Vector3d v_world = (s.hip_center - *prev_hip_) / *dt;
      const double c = std::cos(s.hip_yaw), sn = std::sin(s.hip_yaw);
      const double v_fwd = c * v_world.x() + sn * v_world.y();
      const double v_lat = -sn * v_world.x() + c * v_world.y();
      const double yaw_rate = wrap_angle(s.hip_yaw - *prev_yaw_) / *dt;
      const BaseVelocity v{deadband(v_fwd * cfg_.base_linear_gain, cfg_.deadband),
                           deadband(v_lat * cfg_.base_linear_gain, cfg_.deadband),
                           deadband(yaw_rate * cfg_.base_angular_gain, cfg_.deadband)};
      pending_base_ = v.clamped(cfg_.base_limits);
    }
    prev_hip_ = s.hip_center;
    prev_yaw_ = s.hip_yaw;
  } else {
    prev_hip_.reset();
    prev_yaw_.reset();
  }

  if (calibration_ && hip_ok && ankles_ok) {
    const TorsoCalibration& c = *calibration_;
    pending_torso_ = std::clamp((hip_ankle - c.hip_ankle_min) / (c.hip_ankle_max - c.hip_ankle_min), 0.0, 1.0);
  }

  const Pose hip_frame(s.hip_center, Eigen::Quaterniond(Eigen::AngleAxisd(s.hip_yaw, Eigen::Vector3d::UnitZ())));
  const Pose hip_inv = hip_frame.inverse();
  const std::array<const Pose*, 2> palms = {&s.left_palm, &s.right_palm};
  for (int h = 0; h < 2; ++h) {
    if (!(palm_ok[h] && hip_ok)) {
      prev_palm_rel_[h].reset();
      continue;
    }
    const Pose rel = hip_inv * *palms[h];
    if (engaged() && prev_palm_rel_[h]) {
      const DeltaPose d = compose_delta(*prev_palm_rel_[h], rel)
                              .rotated(cfg_.frame_rotation)
                              .scaled(cfg_.translation_gain, cfg_.rotation_gain);
      pending_arm_[h] = pending_arm_[h] ? chain_deltas(*pending_arm_[h], d) : d;
    }
    prev_palm_rel_[h] = rel;
  }
}

PartialCommand VisionParser::on_tick(TimestampUs) {
  PartialCommand out;
  if (!have_output_) return out;
  if (pending_base_) out.base = Sourced<BaseVelocity>{*pending_base_, {}};
  if (pending_torso_) out.torso = Sourced<double>{*pending_torso_, {}};
  if (pending_arm_[0]) out.left_arm = Sourced<DeltaPose>{*pending_arm_[0], {}};
  if (pending_arm_[1]) out.right_arm = Sourced<DeltaPose>{*pending_arm_[1], {}};
  have_output_ = false;
  pending_base_.reset();
  pending_torso_.reset();
  pending_arm_ = {};
  return out;
}

}  // namespace mmteleop
