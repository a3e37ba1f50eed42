#include "mmteleop/embodiment.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "yaml_util.hpp"

namespace mmteleop {

Eigen::VectorXd Chain::lower_limits() const {
  Eigen::VectorXd v(dof());
  for (std::size_t i = 0; i < dof(); ++i) v[i] = joints[i].lower;
  return v;
}

Eigen::VectorXd Chain::upper_limits() const {
  Eigen::VectorXd v(dof());
  for (std::size_t i = 0; i < dof(); ++i) v[i] = joints[i].upper;
  return v;
}

Eigen::VectorXd Chain::max_velocities() const {
  Eigen::VectorXd v(dof());
  for (std::size_t i = 0; i < dof(); ++i) v[i] = joints[i].max_velocity;
  return v;
}

void EmbodimentSpec::validate() const {
  if (!left_arm && !right_arm) throw ConfigError("embodiment '" + name + "' has no arms");
  for (const Chain* c : {arm(true), arm(false)}) {
    if (c == nullptr) continue;
    if (c->joints.empty()) throw ConfigError("chain '" + c->name + "' has no joints");
    for (const Joint& j : c->joints) {
      if (!(j.lower < j.upper)) throw ConfigError("joint '" + j.name + "': lower limit must be below upper");
      if (std::abs(j.axis.norm() - 1.0) > 1e-9) throw ConfigError("joint '" + j.name + "': axis must be unit length");
      if (!(j.max_velocity > 0.0)) throw ConfigError("joint '" + j.name + "': max_velocity must be positive");
    }
    if (c->home.size() != static_cast<Eigen::Index>(c->dof())) {
      throw ConfigError("chain '" + c->name + "': home configuration has wrong length");
    }
    for (std::size_t i = 0; i < c->dof(); ++i) {
      if (c->home[i] < c->joints[i].lower || c->home[i] > c->joints[i].upper) {
        throw ConfigError("chain '" + c->name + "': home configuration outside joint limits");
      }
    }
  }
  if (torso) {
    if (!(torso->lower < torso->upper)) throw ConfigError("torso range must have lower < upper");
    if (torso->home < torso->lower || torso->home > torso->upper) throw ConfigError("torso home outside range");
  }
  for (const CameraMount& cam : cameras) {
    if (cam.width <= 0 || cam.height <= 0 || cam.width > 4096 || cam.height > 4096) {
      throw ConfigError("camera '" + cam.id + "': bad resolution");
    }
    if (!(cam.vfov_deg > 0.0 && cam.vfov_deg < 180.0)) throw ConfigError("camera '" + cam.id + "': bad vfov");
  }
}

namespace {

Chain parse_chain(const YAML::Node& n, const std::string& name) {
  Chain c;
  c.name = name;
  c.mount = yaml::transform(n["mount"], name + ".mount");
  c.tool = yaml::transform(n["tool"], name + ".tool");
  const YAML::Node joints = yaml::require(n, "joints");
  if (!joints.IsSequence()) throw ConfigError("'joints' must be a list", yaml::line_of(joints));
  for (const auto& jn : joints) {
    Joint j;
    j.name = yaml::get<std::string>(jn, "name");
    const auto type = yaml::get<std::string>(jn, "type");
    if (type == "revolute") {
      j.type = JointType::revolute;
    } else if (type == "prismatic") {
      j.type = JointType::prismatic;
    } else {
      throw ConfigError("joint '" + j.name + "': unknown type '" + type + "'", yaml::line_of(jn["type"]));
    }
    j.axis = yaml::vec3(yaml::require(jn, "axis"), "axis");
    if (std::abs(j.axis.norm() - 1.0) > 1e-9) {
      throw ConfigError("joint '" + j.name + "': axis must be unit length", yaml::line_of(jn["axis"]));
    }
    j.origin = yaml::transform(jn["origin"], j.name + ".origin");
    const auto limits = yaml::doubles(yaml::require(jn, "limits"), "limits");
    if (limits.size() != 2 || !(limits[0] < limits[1])) {
      throw ConfigError("joint '" + j.name + "': limits must be [lower, upper] with lower < upper",
                        yaml::line_of(jn["limits"]));
    }
    j.lower = limits[0];
    j.upper = limits[1];
    j.max_velocity = yaml::get<double>(jn, "max_velocity");
    c.joints.push_back(std::move(j));
  }
  if (n["home"]) {
    const auto home = yaml::doubles(n["home"], "home");
    c.home = Eigen::Map<const Eigen::VectorXd>(home.data(), static_cast<Eigen::Index>(home.size()));
  } else {
    c.home = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(c.dof()));
  }
  return c;
}

}  // namespace

EmbodimentSpec parse_embodiment(const std::string& yaml_text) {
  const YAML::Node root = yaml::parse(yaml_text);
  EmbodimentSpec spec;
  spec.name = yaml::get<std::string>(root, "name");

  if (const YAML::Node base = root["base"]) {
    const auto type = yaml::get_or<std::string>(base, "type", "differential");
    if (type == "differential") {
      spec.base_type = BaseType::differential;
    } else if (type == "omnidirectional") {
      spec.base_type = BaseType::omnidirectional;
    } else {
      throw ConfigError("unknown base type '" + type + "'", yaml::line_of(base["type"]));
    }
    spec.base_limits.linear = yaml::get_or(base, "max_linear", spec.base_limits.linear);
    spec.base_limits.angular = yaml::get_or(base, "max_angular", spec.base_limits.angular);
  }

  if (const YAML::Node torso = root["torso"]) {
    const auto range = yaml::doubles(yaml::require(torso, "range"), "range");
    if (range.size() != 2 || !(range[0] < range[1])) {
      throw ConfigError("torso range must be [lower, upper] with lower < upper", yaml::line_of(torso["range"]));
    }
    TorsoSpec t{range[0], range[1], yaml::get_or(torso, "max_velocity", 0.1), range[0]};
    t.home = yaml::get_or(torso, "home", t.lower);
    spec.torso = t;
  }

  const YAML::Node arms = yaml::require(root, "arms");
  if (!arms.IsMap()) throw ConfigError("'arms' must map left/right to chains", yaml::line_of(arms));
  for (const auto& kv : arms) {
    const auto side = kv.first.as<std::string>();
    if (side == "left") {
      spec.left_arm = parse_chain(kv.second, "left");
    } else if (side == "right") {
      spec.right_arm = parse_chain(kv.second, "right");
    } else {
      throw ConfigError("arm side must be 'left' or 'right', got '" + side + "'", yaml::line_of(kv.first));
    }
  }

  if (const YAML::Node cams = root["cameras"]) {
    for (const auto& cn : cams) {
      CameraMount cam;
      cam.id = yaml::get<std::string>(cn, "id");
      const auto parent = yaml::get_or<std::string>(cn, "parent", "torso");
      if (parent != "base" && parent != "torso") {
        throw ConfigError("camera parent must be 'base' or 'torso'", yaml::line_of(cn["parent"]));
      }
      cam.parent = parent == "base" ? MountParent::base : MountParent::torso;
      cam.transform = yaml::transform(cn, "camera " + cam.id);
      cam.width = yaml::get_or(cn, "width", cam.width);
      cam.height = yaml::get_or(cn, "height", cam.height);
      cam.vfov_deg = yaml::get_or(cn, "vfov_deg", cam.vfov_deg);
      spec.cameras.push_back(std::move(cam));
    }
  }

  spec.validate();
  return spec;
}

EmbodimentSpec load_embodiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open embodiment file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_embodiment(ss.str());
}

}  // namespace mmteleop
