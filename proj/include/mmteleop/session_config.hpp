#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mmteleop/compositor.hpp"
#include "mmteleop/consolidation.hpp"
#include "mmteleop/parsers.hpp"

namespace mmteleop {

enum class DeviceType : std::uint8_t { keyboard, sixdof, vr, vision };

struct DeviceConfig {
  std::string id;
  DeviceType type = DeviceType::keyboard;
  std::set<BodyPart> controls;  // empty: every capability not claimed elsewhere
  ParserConfig parser;
  Keymap keymap;
  std::optional<TorsoCalibration> calibration;
  int line = 0;
};

/// Session configuration file, see docs/session_format.md. Relative task,
/// embodiment and script paths resolve against the config file's directory.
struct SessionConfig {
  std::string task_path;
  std::string embodiment_path;
  std::optional<std::string> script_path;
  double tick_rate_hz = 20.0;
  std::uint64_t seed = 0;
  double ik_damping = 0.05;
  bool render_images = true;
  ConsolidationPolicy consolidation;
  std::vector<DeviceConfig> devices;
  Assignment assignment;
  std::string text;  // raw file contents, digested into episode headers
};

/// Parts the device can produce; for keyboards, the parts its keymap binds.
std::set<BodyPart> device_capabilities(const DeviceConfig& device);

/// Throws ConfigError (with line numbers where available), including for an
/// assignment that cannot be resolved.
SessionConfig parse_session_config(const std::string& text, const std::string& base_dir = ".");
SessionConfig load_session_config(const std::string& path);

/// Parsers for every configured device, restricted to their assigned parts.
std::vector<std::unique_ptr<Parser>> make_parsers(const SessionConfig& config);

}  // namespace mmteleop
