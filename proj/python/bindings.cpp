#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mmteleop/embodiment.hpp"
#include "mmteleop/errors.hpp"
#include "mmteleop/kinematics.hpp"
#include "mmteleop/recorder.hpp"
#include "mmteleop/session.hpp"
#include "mmteleop/wire.hpp"

namespace py = pybind11;
using namespace mmteleop;

namespace {

const Chain& arm_of(const EmbodimentSpec& spec, const std::string& arm) {
  const Chain* c = arm == "left" ? spec.arm(true) : arm == "right" ? spec.arm(false) : nullptr;
  if (c == nullptr) throw py::value_error("embodiment '" + spec.name + "' has no arm '" + arm + "'");
  return *c;
}

py::tuple pose_tuple(const Pose& p) {
  const Eigen::Quaterniond& q = p.orientation();
  return py::make_tuple(Eigen::Vector3d(p.position()), Eigen::Vector4d(q.w(), q.x(), q.y(), q.z()));
}

Eigen::Vector3d vec3(const py::handle& h) {
  const auto v = h.cast<std::vector<double>>();
  if (v.size() != 3) throw py::value_error("expected 3 values");
  return {v[0], v[1], v[2]};
}

// Commands cross the boundary as dicts: arms map to (translation, rotation),
// grippers and torso to floats, base to (vx, vy, wz); "source" tags every field.
ActionCommand command_from_dict(const py::dict& d) {
  ActionCommand c;
  const std::string src = d.contains("source") ? d["source"].cast<std::string>() : "python";
  if (d.contains("timestamp_us")) c.timestamp_us = d["timestamp_us"].cast<TimestampUs>();
  for (const char* arm : {"left_arm", "right_arm"}) {
    if (!d.contains(arm)) continue;
    const auto tr = d[arm].cast<py::sequence>();
    if (tr.size() != 2) throw py::value_error(std::string(arm) + " must be (translation, rotation)");
    Sourced<DeltaPose> v{DeltaPose(vec3(tr[0]), vec3(tr[1])), src};
    (std::string(arm) == "left_arm" ? c.left_arm : c.right_arm) = v;
  }
  if (d.contains("left_gripper")) c.left_gripper = Sourced<double>{d["left_gripper"].cast<double>(), src};
  if (d.contains("right_gripper")) c.right_gripper = Sourced<double>{d["right_gripper"].cast<double>(), src};
  if (d.contains("torso")) c.torso = Sourced<double>{d["torso"].cast<double>(), src};
  if (d.contains("base")) {
    const Eigen::Vector3d b = vec3(d["base"]);
    c.base = Sourced<BaseVelocity>{{b.x(), b.y(), b.z()}, src};
  }
  return c;
}

py::dict command_to_dict(const ActionCommand& c) {
  py::dict d;
  d["timestamp_us"] = c.timestamp_us;
  py::dict sources;
  const auto arm = [](const Sourced<DeltaPose>& a) {
    return py::make_tuple(Eigen::Vector3d(a.value.translation()), Eigen::Vector3d(a.value.rotation()));
  };
  if (c.left_arm) d["left_arm"] = arm(*c.left_arm), sources["left_arm"] = c.left_arm->source;
  if (c.right_arm) d["right_arm"] = arm(*c.right_arm), sources["right_arm"] = c.right_arm->source;
  if (c.left_gripper) d["left_gripper"] = c.left_gripper->value, sources["left_gripper"] = c.left_gripper->source;
  if (c.right_gripper) d["right_gripper"] = c.right_gripper->value, sources["right_gripper"] = c.right_gripper->source;
  if (c.torso) d["torso"] = c.torso->value, sources["torso"] = c.torso->source;
  if (c.base) {
    d["base"] = py::make_tuple(c.base->value.vx, c.base->value.vy, c.base->value.wz);
    sources["base"] = c.base->source;
  }
  d["sources"] = sources;
  return d;
}

py::bytes to_py(const Bytes& b) { return {reinterpret_cast<const char*>(b.data()), b.size()}; }

Bytes from_py(const py::bytes& b) {
  const std::string s = b;
  return {s.begin(), s.end()};
}

py::array_t<float> vector_array(const ActionVector17& v) {
  py::array_t<float> out(17);
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Whole-body teleoperation core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IntegrityError>(m, "IntegrityError", PyExc_ValueError);
  py::register_exception<TransportError>(m, "TransportError", PyExc_ConnectionError);
  py::register_exception<SequencingError>(m, "SequencingError", PyExc_ValueError);

  py::class_<EmbodimentSpec>(m, "Embodiment")
      .def_static("load", &load_embodiment, py::arg("path"))
      .def_static("parse", &parse_embodiment, py::arg("yaml_text"))
      .def_readonly("name", &EmbodimentSpec::name)
      .def_property_readonly("arms", [](const EmbodimentSpec& s) {
        std::vector<std::string> out;
        if (s.left_arm) out.emplace_back("left");
        if (s.right_arm) out.emplace_back("right");
        return out;
      })
      .def("home", [](const EmbodimentSpec& s, const std::string& arm) { return Eigen::VectorXd(arm_of(s, arm).home); },
           py::arg("arm"))
      .def("limits",
           [](const EmbodimentSpec& s, const std::string& arm) {
             const Chain& c = arm_of(s, arm);
             return py::make_tuple(c.lower_limits(), c.upper_limits());
           },
           py::arg("arm"))
      .def("forward_kinematics",
           [](const EmbodimentSpec& s, const std::string& arm, const Eigen::VectorXd& q) {
             return pose_tuple(forward_kinematics(arm_of(s, arm), q));
           },
           py::arg("arm"), py::arg("q"), "End-effector (position, quaternion wxyz) in the torso frame.")
      .def("jacobian",
           [](const EmbodimentSpec& s, const std::string& arm, const Eigen::VectorXd& q) {
             return Eigen::MatrixXd(jacobian(arm_of(s, arm), q));
           },
           py::arg("arm"), py::arg("q"))
      .def("ik_step",
           [](const EmbodimentSpec& s, const std::string& arm, const Eigen::VectorXd& q,
              const Eigen::Vector3d& translation, const Eigen::Vector3d& rotation, double damping, double tick_s) {
             IkOptions o;
             o.damping = damping;
             o.tick_s = tick_s;
             return diff_ik_step(arm_of(s, arm), q, DeltaPose(translation, rotation), o);
           },
           py::arg("arm"), py::arg("q"), py::arg("translation"), py::arg("rotation"), py::arg("damping") = 0.05,
           py::arg("tick_s") = 0.05);

  m.def("damped_least_squares",
        [](const Eigen::MatrixXd& J, const Eigen::VectorXd& dx, double damping) {
          if (J.rows() != 6 || dx.size() != 6) throw py::value_error("expected a 6xN Jacobian and a 6-vector");
          return damped_least_squares(J, Vector6d(dx), damping);
        },
        py::arg("jacobian"), py::arg("dx"), py::arg("damping"));

  m.def("flatten", [](const py::dict& d) { return vector_array(flatten(command_from_dict(d))); }, py::arg("command"),
        "17-slot action vector of a command dict.");
  m.def("unflatten",
        [](const std::vector<float>& v) {
          if (v.size() != 17) throw py::value_error("expected 17 values");
          ActionVector17 a;
          std::copy(v.begin(), v.end(), a.begin());
          return command_to_dict(unflatten(a));
        },
        py::arg("vector"));
  m.def("encode_action", [](const py::dict& d) { return to_py(encode_action_payload(command_from_dict(d))); },
        py::arg("command"));
  m.def("decode_action", [](const py::bytes& b) { return command_to_dict(decode_action_payload(from_py(b))); },
        py::arg("payload"));

  m.def("encode_frame", [](int type, const py::bytes& payload) {
    if (type < 0 || type > 3) throw py::value_error("message type must be 0..3");
    return to_py(encode_frame(static_cast<MessageType>(type), from_py(payload)));
  }, py::arg("type"), py::arg("payload"));
  m.def("decode_frame",
        [](const py::bytes& b) -> py::object {
          const Bytes bytes = from_py(b);
          auto r = decode_frame(bytes);
          if (std::holds_alternative<NeedMoreBytes>(r)) return py::none();
          const auto& d = std::get<DecodedFrame>(r);
          return py::make_tuple(static_cast<int>(d.frame.type), to_py(d.frame.payload), d.consumed);
        },
        py::arg("data"), "(type, payload, consumed), or None when more bytes are needed.");
  m.def("crc32", [](const py::bytes& b) { return crc32(from_py(b)); }, py::arg("data"));

  m.def("load_episode",
        [](const std::string& path) {
          const Episode ep = Episode::load(path);
          py::dict d;
          d["task"] = ep.header().task_name;
          d["embodiment"] = ep.header().embodiment_name;
          d["tick_rate_hz"] = ep.header().tick_rate_hz;
          d["seed"] = ep.header().seed;
          d["ticks"] = ep.size();
          py::array_t<float> actions({static_cast<py::ssize_t>(ep.size()), py::ssize_t{17}});
          float* out = actions.mutable_data();
          for (const EpisodeRecord& r : ep.records()) out = std::copy(r.vector.begin(), r.vector.end(), out);
          d["actions"] = actions;
          if (ep.footer()) {
            d["final_hash"] = ep.footer()->final_hash;
            d["success"] = ep.footer()->success;
          }
          return d;
        },
        py::arg("path"));
  m.def("replay",
        [](const std::string& path) {
          const ReplayResult r = replay(Episode::load(path));
          py::dict d;
          d["matches"] = r.matches;
          d["final_hash"] = r.final_hash;
          d["recorded_hash"] = r.recorded_hash;
          d["ticks"] = r.ticks;
          d["success"] = r.success;
          d["first_divergent_tick"] = r.first_divergent_tick ? py::cast(*r.first_divergent_tick) : py::none();
          return d;
        },
        py::arg("path"));

  m.def("run_local",
        [](const std::string& config_path, std::optional<std::string> record, std::optional<std::string> latency) {
          SessionOptions o;
          o.record_path = std::move(record);
          if (latency) o.latency = LatencyModel::parse(*latency);
          SessionReport r;
          {
            py::gil_scoped_release release;
            r = run_session(load_session_config(config_path), o);
          }
          return r.to_json();
        },
        py::arg("config"), py::arg("record") = py::none(), py::arg("latency") = py::none(),
        "Runs a scripted local session and returns the report as JSON text.");
}
