#include "mmteleop/task.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include "yaml_util.hpp"

namespace mmteleop {

namespace {

std::array<std::uint8_t, 3> parse_color(const YAML::Node& n) {
  const auto c = yaml::doubles(n, "color");
  if (c.size() != 3) throw ConfigError("'color' must be [r, g, b]", yaml::line_of(n));
  std::array<std::uint8_t, 3> out{};
  for (int i = 0; i < 3; ++i) {
    if (c[i] < 0 || c[i] > 255) throw ConfigError("color channels must be in [0, 255]", yaml::line_of(n));
    out[i] = static_cast<std::uint8_t>(c[i]);
  }
  return out;
}

Shape parse_shape(const YAML::Node& n) {
  Shape s;
  const auto type = yaml::get<std::string>(n, "shape");
  if (type == "box") {
    s.type = ShapeType::box;
    s.size = yaml::vec3(yaml::require(n, "size"), "size");
    if ((s.size.array() <= 0.0).any()) throw ConfigError("box size must be positive", yaml::line_of(n["size"]));
  } else if (type == "sphere") {
    s.type = ShapeType::sphere;
    s.radius = yaml::get<double>(n, "radius");
  } else if (type == "cylinder") {
    s.type = ShapeType::cylinder;
    s.radius = yaml::get<double>(n, "radius");
    s.height = yaml::get<double>(n, "height");
  } else {
    throw ConfigError("unknown shape '" + type + "'", yaml::line_of(n["shape"]));
  }
  if (s.type != ShapeType::box && !(s.radius > 0.0)) throw ConfigError("radius must be positive", yaml::line_of(n));
  if (s.type == ShapeType::cylinder && !(s.height > 0.0)) throw ConfigError("height must be positive", yaml::line_of(n));
  return s;
}

}  // namespace

TaskSpec parse_task(const std::string& yaml_text) {
  const YAML::Node root = yaml::parse(yaml_text);
  TaskSpec t;
  t.name = yaml::get<std::string>(root, "name");
  t.time_limit_s = yaml::get_or(root, "time_limit", t.time_limit_s);
  if (!(t.time_limit_s > 0.0)) throw ConfigError("time_limit must be positive", yaml::line_of(root["time_limit"]));
  if (const YAML::Node base = root["base"]) {
    t.base.x = yaml::get_or(base, "x", 0.0);
    t.base.y = yaml::get_or(base, "y", 0.0);
    t.base.theta = yaml::get_or(base, "theta", 0.0);
  }

  const YAML::Node objects = yaml::require(root, "objects");
  if (!objects.IsSequence()) throw ConfigError("'objects' must be a list", yaml::line_of(objects));
  for (const auto& on : objects) {
    ObjectTemplate ot;
    ot.object.id = yaml::get<std::string>(on, "id");
    for (const auto& other : t.objects) {
      if (other.object.id == ot.object.id) {
        throw ConfigError("duplicate object id '" + ot.object.id + "'", yaml::line_of(on));
      }
    }
    ot.object.shape = parse_shape(on);
    ot.object.pose = yaml::transform(on, "object " + ot.object.id);
    ot.object.graspable = yaml::get_or(on, "graspable", false);
    if (on["color"]) ot.object.color = parse_color(on["color"]);
    if (const YAML::Node rnd = on["randomize"]) {
      if (rnd["xyz"]) ot.noise.position = yaml::vec3(rnd["xyz"], "randomize.xyz").cwiseAbs();
      ot.noise.yaw = std::abs(yaml::get_or(rnd, "yaw", 0.0));
    }
    t.objects.push_back(std::move(ot));
  }

  const auto known = [&](const std::string& id, const YAML::Node& at) {
    for (const auto& o : t.objects) {
      if (o.object.id == id) return;
    }
    throw ConfigError("unknown object '" + id + "'", yaml::line_of(at));
  };
  const YAML::Node success = yaml::require(root, "success");
  if (!success.IsSequence()) throw ConfigError("'success' must be a list of clauses", yaml::line_of(success));
  for (const auto& cn : success) {
    if (cn["inside"]) {
      const YAML::Node in = cn["inside"];
      InsideRegion r{yaml::get<std::string>(in, "object"), yaml::vec3(yaml::require(in, "min"), "min"),
                     yaml::vec3(yaml::require(in, "max"), "max")};
      known(r.object_id, in);
      if (!(r.min.array() < r.max.array()).all()) throw ConfigError("region min must be below max", yaml::line_of(in));
      t.success.emplace_back(r);
    } else if (cn["released"]) {
      const auto id = yaml::as<std::string>(cn["released"], "released");
      known(id, cn["released"]);
      t.success.emplace_back(NotGrasped{id});
    } else {
      throw ConfigError("unknown success clause (expected 'inside' or 'released')", yaml::line_of(cn));
    }
  }
  return t;
}

TaskSpec load_task(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open task file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_task(ss.str());
}

WorldState initial_world(const TaskSpec& task, const EmbodimentSpec& spec, std::uint64_t seed) {
  WorldState s;
  s.base = task.base;
  s.joints = JointState::home(spec);
  std::mt19937_64 rng(seed);
  const auto sym = [&](double half) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return (2.0 * u - 1.0) * half;
  };
  for (const ObjectTemplate& ot : task.objects) {
    SceneObject o = ot.object;
    const Eigen::Vector3d dp(sym(ot.noise.position.x()), sym(ot.noise.position.y()), sym(ot.noise.position.z()));
    const double dyaw = sym(ot.noise.yaw);
    o.pose = Pose(o.pose.position() + dp,
                  Eigen::Quaterniond(Eigen::AngleAxisd(dyaw, Eigen::Vector3d::UnitZ())) * o.pose.orientation());
    s.objects.push_back(std::move(o));
  }
  return s;
}

bool clause_holds(const TaskClause& clause, const WorldState& state) {
  if (const auto* r = std::get_if<InsideRegion>(&clause)) {
    const SceneObject* o = state.find(r->object_id);
    if (o == nullptr) return false;
    const Eigen::Vector3d& p = o->pose.position();
    return (p.array() >= r->min.array()).all() && (p.array() <= r->max.array()).all();
  }
  const auto& g = std::get<NotGrasped>(clause);
  for (const auto& c : state.grasps) {
    if (c && c->object_id == g.object_id) return false;
  }
  return true;
}

TaskStatus check_task(const WorldState& state, const TaskSpec& task) {
  TaskStatus st;
  st.success = !task.success.empty();
  for (const auto& c : task.success) st.success = st.success && clause_holds(c, state);
  st.done = st.success || state.sim_time >= task.time_limit_s - 1e-9;
  return st;
}

}  // namespace mmteleop
