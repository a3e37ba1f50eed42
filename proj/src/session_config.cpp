#include "mmteleop/session_config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "yaml_util.hpp"

namespace mmteleop {

std::set<BodyPart> device_capabilities(const DeviceConfig& device) {
  const ParserConfig cfg;
  switch (device.type) {
    case DeviceType::keyboard:
      return KeyboardParser("probe", cfg, device.keymap).capabilities();
    case DeviceType::sixdof:
      return SixDofParser("probe", cfg).capabilities();
    case DeviceType::vr:
      return VrParser("probe", cfg).capabilities();
    case DeviceType::vision:
      return VisionParser("probe", cfg).capabilities();
  }
  return {};
}

namespace {

std::string resolve(const std::string& base_dir, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? p : (std::filesystem::path(base_dir) / path).lexically_normal().string();
}

ParserConfig parse_parser_config(const YAML::Node& n, ParserConfig cfg) {
  if (!n) return cfg;
  if (!n.IsMap()) throw ConfigError("'config' must be a mapping", yaml::line_of(n));
  static const std::set<std::string> known = {
      "translation_gain", "rotation_gain", "base_linear_gain", "base_angular_gain", "torso_rate_gain",
      "deadband", "smoothing", "confidence_threshold", "clutch_button", "torso_initial", "frame_rpy",
      "mode_button", "gripper_button", "auto_calibrate", "calibration_duration", "torso_travel"};
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (!known.contains(key)) throw ConfigError("unknown parser option '" + key + "'", yaml::line_of(kv.first));
  }
  cfg.translation_gain = yaml::get_or(n, "translation_gain", cfg.translation_gain);
  cfg.rotation_gain = yaml::get_or(n, "rotation_gain", cfg.rotation_gain);
  cfg.base_linear_gain = yaml::get_or(n, "base_linear_gain", cfg.base_linear_gain);
  cfg.base_angular_gain = yaml::get_or(n, "base_angular_gain", cfg.base_angular_gain);
  cfg.torso_rate_gain = yaml::get_or(n, "torso_rate_gain", cfg.torso_rate_gain);
  cfg.deadband = yaml::get_or(n, "deadband", cfg.deadband);
  cfg.smoothing = yaml::get_or(n, "smoothing", cfg.smoothing);
  cfg.confidence_threshold = yaml::get_or(n, "confidence_threshold", cfg.confidence_threshold);
  if (n["clutch_button"]) cfg.clutch_button = yaml::as<int>(n["clutch_button"], "clutch_button");
  cfg.torso_initial = yaml::get_or(n, "torso_initial", cfg.torso_initial);
  if (n["frame_rpy"]) cfg.frame_rotation = yaml::rpy(yaml::vec3(n["frame_rpy"], "frame_rpy"));
  cfg.mode_button = yaml::get_or(n, "mode_button", cfg.mode_button);
  cfg.gripper_button = yaml::get_or(n, "gripper_button", cfg.gripper_button);
  cfg.auto_calibrate = yaml::get_or(n, "auto_calibrate", cfg.auto_calibrate);
  cfg.calibration_duration_s = yaml::get_or(n, "calibration_duration", cfg.calibration_duration_s);
  cfg.torso_travel = yaml::get_or(n, "torso_travel", cfg.torso_travel);
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(e.what(), yaml::line_of(n));
  }
  return cfg;
}

Keymap parse_keymap(const YAML::Node& n) {
  if (!n) return {};
  if (!n.IsSequence()) throw ConfigError("'keymap' must be a list", yaml::line_of(n));
  Keymap km;
  for (const auto& b : n) {
    const auto key = yaml::get<std::string>(b, "key");
    KeyBinding kb;
    kb.part = [&] {
      try {
        return parse_body_part(yaml::get<std::string>(b, "part"));
      } catch (const ConfigError& e) {
        throw ConfigError(e.what(), yaml::line_of(b["part"]));
      }
    }();
    kb.axis = yaml::get_or(b, "axis", 0);
    kb.sign = yaml::get_or(b, "sign", 1);
    try {
      const Keymap one = make_keymap({{key, kb}});
      if (km.contains(key)) throw ConfigError("key '" + key + "' is bound twice");
      km.emplace(key, one.at(key));
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), yaml::line_of(b));
    }
  }
  return km;
}

}  // namespace

SessionConfig parse_session_config(const std::string& text, const std::string& base_dir) {
  const YAML::Node root = yaml::parse(text);
  if (!root.IsMap()) throw ConfigError("session config must be a mapping", yaml::line_of(root));
  SessionConfig c;
  c.text = text;

  const YAML::Node s = yaml::require(root, "session");
  c.task_path = resolve(base_dir, yaml::get<std::string>(s, "task"));
  c.embodiment_path = resolve(base_dir, yaml::get<std::string>(s, "embodiment"));
  if (s["script"]) c.script_path = resolve(base_dir, yaml::get<std::string>(s, "script"));
  c.tick_rate_hz = yaml::get_or(s, "tick_rate", c.tick_rate_hz);
  if (!(c.tick_rate_hz >= 10.0 && c.tick_rate_hz <= 1000.0)) {
    throw ConfigError("tick_rate must be in [10, 1000] Hz", yaml::line_of(s["tick_rate"]));
  }
  c.seed = yaml::get_or<std::uint64_t>(s, "seed", c.seed);
  c.ik_damping = yaml::get_or(s, "ik_damping", c.ik_damping);
  if (!(c.ik_damping > 0.0)) throw ConfigError("ik_damping must be positive", yaml::line_of(s["ik_damping"]));
  c.render_images = yaml::get_or(s, "render_images", c.render_images);

  if (const YAML::Node cons = root["consolidation"]) {
    c.consolidation.velocity_ttl_s = yaml::get_or(cons, "velocity_ttl", c.consolidation.velocity_ttl_s);
    try {
      c.consolidation.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), yaml::line_of(cons));
    }
  }

  const YAML::Node devices = yaml::require(root, "devices");
  if (!devices.IsSequence() || devices.size() == 0) {
    throw ConfigError("'devices' must be a non-empty list", yaml::line_of(devices));
  }
  ParserConfig defaults;
  defaults.tick_period_s = 1.0 / c.tick_rate_hz;
  std::vector<DeviceClaim> claims;
  for (const auto& dn : devices) {
    DeviceConfig d;
    d.line = yaml::line_of(dn);
    d.id = yaml::get<std::string>(dn, "id");
    for (const auto& other : c.devices) {
      if (other.id == d.id) throw ConfigError("duplicate device id '" + d.id + "'", d.line);
    }
    const auto type = yaml::get<std::string>(dn, "type");
    if (type == "keyboard") {
      d.type = DeviceType::keyboard;
    } else if (type == "sixdof") {
      d.type = DeviceType::sixdof;
    } else if (type == "vr") {
      d.type = DeviceType::vr;
    } else if (type == "vision") {
      d.type = DeviceType::vision;
    } else {
      throw ConfigError("unknown device type '" + type + "'", yaml::line_of(dn["type"]));
    }
    int controls_line = d.line;
    if (const YAML::Node ctl = dn["controls"]) {
      controls_line = yaml::line_of(ctl);
      if (!ctl.IsSequence()) throw ConfigError("'controls' must be a list of body parts", controls_line);
      for (const auto& pn : ctl) {
        try {
          d.controls.insert(parse_body_part(yaml::as<std::string>(pn, "controls")));
        } catch (const ConfigError& e) {
          throw ConfigError(e.what(), yaml::line_of(pn));
        }
      }
    }
    d.parser = parse_parser_config(dn["config"], defaults);
    d.keymap = parse_keymap(dn["keymap"]);
    if (d.type == DeviceType::keyboard && d.keymap.empty()) throw ConfigError("keyboard device needs a keymap", d.line);
    if (const YAML::Node cal = dn["calibration"]) {
      TorsoCalibration tc{yaml::get<double>(cal, "hip_ankle_min"), yaml::get<double>(cal, "hip_ankle_max")};
      if (!(tc.hip_ankle_min < tc.hip_ankle_max)) {
        throw ConfigError("calibration needs hip_ankle_min < hip_ankle_max", yaml::line_of(cal));
      }
      d.calibration = tc;
    }
    claims.push_back({d.id, device_capabilities(d), d.controls, controls_line});
    c.devices.push_back(std::move(d));
  }
  c.assignment = resolve_assignment(claims);
  return c;
}

SessionConfig load_session_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open session config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  try {
    return parse_session_config(ss.str(), dir.empty() ? "." : dir.string());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::vector<std::unique_ptr<Parser>> make_parsers(const SessionConfig& config) {
  std::vector<std::unique_ptr<Parser>> out;
  for (const DeviceConfig& d : config.devices) {
    std::unique_ptr<Parser> p;
    switch (d.type) {
      case DeviceType::keyboard:
        p = std::make_unique<KeyboardParser>(d.id, d.parser, d.keymap);
        break;
      case DeviceType::sixdof:
        p = std::make_unique<SixDofParser>(d.id, d.parser);
        break;
      case DeviceType::vr:
        p = std::make_unique<VrParser>(d.id, d.parser);
        break;
      case DeviceType::vision:
        p = std::make_unique<VisionParser>(d.id, d.parser, d.calibration);
        break;
    }
    std::set<BodyPart> owned;
    for (const auto& [part, owner] : config.assignment.table()) {
      if (owner == d.id) owned.insert(part);
    }
    // A device that owns nothing keeps its full output; the merge drops it.
    if (!owned.empty()) p->set_controlled(owned);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace mmteleop
