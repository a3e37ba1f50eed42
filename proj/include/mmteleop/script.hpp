#pragma once

#include <string>
#include <vector>

#include "mmteleop/input_event.hpp"

namespace mmteleop {

// Scripted input files: newline-delimited JSON, one InputEvent per line.
// Blank lines and lines starting with '#' are skipped. Each object has
// "t_us" (or "t" in seconds), "device", "type" and type-specific fields:
//   key       : "code", "pressed"
//   axis      : "index", "value"
//   button    : "index", "pressed"
//   pose      : "hand" (left|right), "position" [x,y,z], "orientation" [w,x,y,z]
//   keypoints : "hip" [x,y,z], "hip_yaw", "left_palm"/"right_palm" {position, orientation},
//               "left_ankle"/"right_ankle" [x,y,z], optional "confidence" {hip, left_palm, ...}

/// Throws ConfigError with the 1-based line number on malformed input.
/// Events are returned stably sorted by timestamp.
std::vector<InputEvent> parse_script(const std::string& text);
std::vector<InputEvent> load_script(const std::string& path);

std::string format_event(const InputEvent& event);
void save_script(const std::string& path, const std::vector<InputEvent>& events);

}  // namespace mmteleop
