#include "mmteleop/script.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mmteleop/errors.hpp"

namespace mmteleop {

using nlohmann::json;

namespace {

Eigen::Vector3d vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Pose pose(const json& j) {
  const Eigen::Vector3d p = vec3(j.at("position"));
  const json& q = j.at("orientation");
  if (!q.is_array() || q.size() != 4) throw std::invalid_argument("orientation must be [w, x, y, z]");
  return {p, Eigen::Quaterniond(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>())};
}

json to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json to_json(const Pose& p) {
  const auto& q = p.orientation();
  return {{"position", to_json(p.position())}, {"orientation", json::array({q.w(), q.x(), q.y(), q.z()})}};
}

InputEvent parse_line(const json& j) {
  InputEvent e;
  e.device_id = j.at("device").get<std::string>();
  if (j.contains("t_us")) {
    e.timestamp_us = j.at("t_us").get<TimestampUs>();
  } else {
    e.timestamp_us = static_cast<TimestampUs>(std::llround(j.at("t").get<double>() * 1e6));
  }
  const auto type = j.at("type").get<std::string>();
  if (type == "key") {
    e.payload = KeyEvent{j.at("code").get<std::string>(), j.at("pressed").get<bool>()};
  } else if (type == "axis") {
    e = InputEvent::axis(e.device_id, e.timestamp_us, j.at("index").get<int>(), j.at("value").get<double>());
  } else if (type == "button") {
    e.payload = ButtonEvent{j.at("index").get<int>(), j.at("pressed").get<bool>()};
  } else if (type == "pose") {
    const auto hand = j.at("hand").get<std::string>();
    if (hand != "left" && hand != "right") throw std::invalid_argument("hand must be 'left' or 'right'");
    e.payload = TrackedPoseEvent{hand == "left" ? Hand::left : Hand::right, pose(j)};
  } else if (type == "keypoints") {
    KeypointFrame k;
    k.hip_center = vec3(j.at("hip"));
    k.hip_yaw = j.value("hip_yaw", 0.0);
    k.left_palm = pose(j.at("left_palm"));
    k.right_palm = pose(j.at("right_palm"));
    k.left_ankle = vec3(j.at("left_ankle"));
    k.right_ankle = vec3(j.at("right_ankle"));
    if (j.contains("confidence")) {
      const json& c = j.at("confidence");
      k.confidence.hip = c.value("hip", 1.0);
      k.confidence.left_palm = c.value("left_palm", 1.0);
      k.confidence.right_palm = c.value("right_palm", 1.0);
      k.confidence.left_ankle = c.value("left_ankle", 1.0);
      k.confidence.right_ankle = c.value("right_ankle", 1.0);
    }
    e.payload = k;
  } else {
    throw std::invalid_argument("unknown event type '" + type + "'");
  }
  return e;
}

}  // namespace

std::vector<InputEvent> parse_script(const std::string& text) {
  std::vector<InputEvent> events;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      events.push_back(parse_line(json::parse(line)));
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad event: ") + e.what(), line_no);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("bad event: ") + e.what(), line_no);
    }
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const InputEvent& a, const InputEvent& b) { return a.timestamp_us < b.timestamp_us; });
  return events;
}

std::vector<InputEvent> load_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open script '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_script(ss.str());
}

std::string format_event(const InputEvent& e) {
  json j = {{"t_us", e.timestamp_us}, {"device", e.device_id}};
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, KeyEvent>) {
          j["type"] = "key";
          j["code"] = p.code;
          j["pressed"] = p.pressed;
        } else if constexpr (std::is_same_v<T, AxisEvent>) {
          j["type"] = "axis";
          j["index"] = p.index;
          j["value"] = p.value;
        } else if constexpr (std::is_same_v<T, ButtonEvent>) {
          j["type"] = "button";
          j["index"] = p.index;
          j["pressed"] = p.pressed;
        } else if constexpr (std::is_same_v<T, TrackedPoseEvent>) {
          j["type"] = "pose";
          j["hand"] = p.hand == Hand::left ? "left" : "right";
          const json pj = to_json(p.pose);
          j["position"] = pj["position"];
          j["orientation"] = pj["orientation"];
        } else {
          j["type"] = "keypoints";
          j["hip"] = to_json(p.hip_center);
          j["hip_yaw"] = p.hip_yaw;
          j["left_palm"] = to_json(p.left_palm);
          j["right_palm"] = to_json(p.right_palm);
          j["left_ankle"] = to_json(p.left_ankle);
          j["right_ankle"] = to_json(p.right_ankle);
          j["confidence"] = {{"hip", p.confidence.hip},
                             {"left_palm", p.confidence.left_palm},
                             {"right_palm", p.confidence.right_palm},
                             {"left_ankle", p.confidence.left_ankle},
                             {"right_ankle", p.confidence.right_ankle}};
        }
      },
      e.payload);
  return j.dump();
}

void save_script(const std::string& path, const std::vector<InputEvent>& events) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  for (const auto& e : events) out << format_event(e) << '\n';
}

}  // namespace mmteleop
