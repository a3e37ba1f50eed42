#include "mmteleop/recorder.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iterator>
#include <limits>
#include <map>

#include <nlohmann/json.hpp>

#include "mmteleop/errors.hpp"
#include "mmteleop/robot_interface.hpp"
#include "mmteleop/simulator.hpp"
#include "mmteleop/task.hpp"

namespace mmteleop {

namespace {

constexpr std::uint8_t kEpisodeFormat = 1;

Bytes control_frame(ControlKind kind, Bytes body) {
  return encode_frame(MessageType::session_control, encode_control_payload({kind, std::move(body)}));
}

EpisodeHeader decode_header(std::span<const std::uint8_t> body) {
  ByteReader r(body);
  if (r.u8() != kEpisodeFormat) throw IntegrityError("unsupported episode format");
  EpisodeHeader h;
  h.task_name = r.long_string();
  h.embodiment_name = r.long_string();
  h.config_digest = r.u64();
  h.tick_rate_hz = r.f64();
  h.start_wall_clock_us = r.i64();
  h.seed = r.u64();
  h.ik_damping = r.f64();
  h.task_yaml = r.long_string();
  h.embodiment_yaml = r.long_string();
  if (!r.done()) throw IntegrityError("trailing bytes in episode header");
  return h;
}

EpisodeRecord decode_record(std::span<const std::uint8_t> body) {
  ByteReader r(body);
  EpisodeRecord rec;
  rec.tick = r.u64();
  rec.observation = decompress_observation(r.blob());
  rec.action = decode_action_payload(r.blob());
  rec.vector = read_action_vector(r);
  rec.world_hash = r.u64();
  if (!r.done()) throw IntegrityError("trailing bytes in episode record");
  return rec;
}

EpisodeFooter decode_footer(std::span<const std::uint8_t> body) {
  ByteReader r(body);
  EpisodeFooter f;
  f.final_hash = r.u64();
  f.success = r.u8() != 0;
  f.tick_count = r.u64();
  if (!r.done()) throw IntegrityError("trailing bytes in episode footer");
  return f;
}

EpisodeRecord make_record(std::uint64_t tick, const ObservationFrame& obs, const ActionCommand& cmd,
                          std::uint64_t world_hash) {
  EpisodeRecord r;
  r.tick = tick;
  r.observation = obs;
  r.action = quantize(cmd);
  r.vector = flatten(r.action);
  r.world_hash = world_hash;
  return r;
}

}  // namespace

Bytes encode_header_frame(const EpisodeHeader& h) {
  Bytes body;
  ByteWriter w(body);
  w.u8(kEpisodeFormat);
  w.long_string(h.task_name);
  w.long_string(h.embodiment_name);
  w.u64(h.config_digest);
  w.f64(h.tick_rate_hz);
  w.i64(h.start_wall_clock_us);
  w.u64(h.seed);
  w.f64(h.ik_damping);
  w.long_string(h.task_yaml);
  w.long_string(h.embodiment_yaml);
  return control_frame(ControlKind::episode_header, std::move(body));
}

Bytes encode_record_frame(const EpisodeRecord& r) {
  Bytes body;
  ByteWriter w(body);
  w.u64(r.tick);
  w.blob(compress_observation(r.observation));
  w.blob(encode_action_payload(r.action));
  write_action_vector(w, r.vector);
  w.u64(r.world_hash);
  return control_frame(ControlKind::episode_record, std::move(body));
}

Bytes encode_footer_frame(const EpisodeFooter& f) {
  Bytes body;
  ByteWriter w(body);
  w.u64(f.final_hash);
  w.u8(f.success ? 1 : 0);
  w.u64(f.tick_count);
  return control_frame(ControlKind::episode_footer, std::move(body));
}

void Episode::record_step(std::uint64_t tick, const ObservationFrame& obs, const ActionCommand& cmd,
                          std::uint64_t world_hash) {
  if (footer_) throw SequencingError("episode already finished");
  if (tick != records_.size()) {
    throw SequencingError("expected tick " + std::to_string(records_.size()) + ", got " + std::to_string(tick));
  }
  records_.push_back(make_record(tick, obs, cmd, world_hash));
}

void Episode::finish(std::uint64_t final_hash, bool success) {
  footer_ = EpisodeFooter{final_hash, success, records_.size()};
}

Bytes Episode::serialize() const {
  Bytes out = encode_header_frame(header_);
  for (const auto& r : records_) {
    const Bytes f = encode_record_frame(r);
    out.insert(out.end(), f.begin(), f.end());
  }
  if (footer_) {
    const Bytes f = encode_footer_frame(*footer_);
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

Episode Episode::deserialize(std::span<const std::uint8_t> bytes) {
  Episode ep;
  bool have_header = false;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    auto res = decode_frame(bytes.subspan(pos));
    if (std::holds_alternative<NeedMoreBytes>(res)) throw IntegrityError("episode truncated");
    auto& df = std::get<DecodedFrame>(res);
    pos += df.consumed;
    if (df.frame.type != MessageType::session_control) throw IntegrityError("unexpected frame type in episode");
    const ControlMessage msg = decode_control_payload(df.frame.payload);
    if (ep.footer_) throw IntegrityError("data after episode footer");
    switch (msg.kind) {
      case ControlKind::episode_header:
        if (have_header) throw IntegrityError("duplicate episode header");
        ep.header_ = decode_header(msg.body);
        have_header = true;
        break;
      case ControlKind::episode_record: {
        if (!have_header) throw IntegrityError("episode record before header");
        EpisodeRecord rec = decode_record(msg.body);
        if (rec.tick != ep.records_.size()) {
          throw SequencingError("non-contiguous tick " + std::to_string(rec.tick) + " at position " +
                                std::to_string(ep.records_.size()));
        }
        ep.records_.push_back(std::move(rec));
        break;
      }
      case ControlKind::episode_footer: {
        if (!have_header) throw IntegrityError("episode footer before header");
        const EpisodeFooter f = decode_footer(msg.body);
        if (f.tick_count != ep.records_.size()) throw IntegrityError("footer tick count does not match records");
        ep.footer_ = f;
        break;
      }
      default:
        throw IntegrityError("unexpected control message in episode");
    }
  }
  if (!have_header) throw IntegrityError("episode has no header");
  if (!ep.footer_) throw IntegrityError("episode truncated (no footer)");
  return ep;
}

void Episode::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  const Bytes b = serialize();
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

Episode Episode::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IntegrityError("cannot open '" + path + "'");
  const Bytes b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(b);
}

EpisodeWriter::EpisodeWriter(const std::string& path, const EpisodeHeader& header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw std::runtime_error("cannot write '" + path + "'");
  const Bytes b = encode_header_frame(header);
  out_.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

void EpisodeWriter::record_step(std::uint64_t tick, const ObservationFrame& obs, const ActionCommand& cmd,
                                std::uint64_t world_hash) {
  if (finished_) throw SequencingError("episode already finished");
  if (tick != next_tick_) {
    throw SequencingError("expected tick " + std::to_string(next_tick_) + ", got " + std::to_string(tick));
  }
  const Bytes b = encode_record_frame(make_record(tick, obs, cmd, world_hash));
  out_.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  ++next_tick_;
}

void EpisodeWriter::finish(std::uint64_t final_hash, bool success) {
  if (finished_) return;
  const Bytes b = encode_footer_frame({final_hash, success, next_tick_});
  out_.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  out_.flush();
  finished_ = true;
  if (!out_) throw std::runtime_error("write failed for '" + path_ + "'");
}

ReplayResult replay(const Episode& episode) {
  const EpisodeHeader& h = episode.header();
  const EmbodimentSpec spec = parse_embodiment(h.embodiment_yaml);
  const TaskSpec task = parse_task(h.task_yaml);
  if (!(h.tick_rate_hz > 0.0)) throw IntegrityError("episode tick rate must be positive");
  const double dt = 1.0 / h.tick_rate_hz;
  MapOptions options;
  options.ik.damping = h.ik_damping;
  options.ik.tick_s = dt;

  ReplayResult res;
  WorldState state = initial_world(task, spec, h.seed);
  for (const EpisodeRecord& rec : episode.records()) {
    const ActionCommand cmd = filter_unusable(rec.action, spec);
    state = step(state, map_command(cmd, state.joints, spec, options), dt, spec);
    if (!res.first_divergent_tick && world_hash(state) != rec.world_hash) res.first_divergent_tick = rec.tick;
    ++res.ticks;
  }
  res.final_hash = world_hash(state);
  res.success = check_task(state, task).success;
  if (episode.footer()) res.recorded_hash = episode.footer()->final_hash;
  res.matches = episode.footer() && res.final_hash == res.recorded_hash && !res.first_divergent_tick;
  if (!res.matches && !res.first_divergent_tick) res.first_divergent_tick = res.ticks;
  return res;
}

void append_manifest(const std::string& manifest_path, const std::string& episode_path, const EpisodeHeader& header,
                     const EpisodeFooter& footer) {
  std::ofstream out(manifest_path, std::ios::app);
  if (!out) throw std::runtime_error("cannot write '" + manifest_path + "'");
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016" PRIx64, footer.final_hash);
  out << episode_path << '\t' << header.task_name << '\t' << (footer.success ? "success" : "failure") << '\t'
      << footer.tick_count << '\t' << hash << '\n';
}

void export_episode(const Episode& episode, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const auto open = [&](const std::string& name) {
    std::ofstream f(fs::path(out_dir) / name, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + (fs::path(out_dir) / name).string() + "'");
    return f;
  };
  const auto put = [](std::ofstream& f, const void* p, std::size_t n) {
    f.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  };

  auto actions = open("actions.f32");
  auto torso = open("torso.f32");
  auto proprio = open("proprio.csv");
  proprio << "tick,sim_time,left_gripper,right_gripper,odom_dx,odom_dy,odom_dtheta\n";
  proprio.precision(17);
  std::map<std::string, std::ofstream> rgb, depth;
  nlohmann::json cameras = nlohmann::json::object();

  for (const EpisodeRecord& r : episode.records()) {
    put(actions, r.vector.data(), sizeof(float) * r.vector.size());
    const float t = r.action.torso ? static_cast<float>(r.action.torso->value) : std::numeric_limits<float>::quiet_NaN();
    put(torso, &t, sizeof t);
    const ObservationFrame& o = r.observation;
    proprio << r.tick << ',' << o.sim_time << ',' << o.left_gripper << ',' << o.right_gripper << ','
            << o.base_odom_delta.dx << ',' << o.base_odom_delta.dy << ',' << o.base_odom_delta.dtheta << '\n';
    for (const RgbImage& img : o.rgb) {
      auto it = rgb.find(img.camera_id);
      if (it == rgb.end()) {
        it = rgb.emplace(img.camera_id, open("rgb_" + img.camera_id + ".u8")).first;
        cameras[img.camera_id] = {{"width", img.width}, {"height", img.height}};
      }
      put(it->second, img.data.data(), img.data.size());
    }
    for (const DepthImage& img : o.depth) {
      auto it = depth.find(img.camera_id);
      if (it == depth.end()) it = depth.emplace(img.camera_id, open("depth_" + img.camera_id + ".u16")).first;
      put(it->second, img.data.data(), img.data.size() * sizeof(std::uint16_t));
    }
  }

  const EpisodeHeader& h = episode.header();
  nlohmann::json meta = {
      {"task", h.task_name},
      {"embodiment", h.embodiment_name},
      {"tick_rate_hz", h.tick_rate_hz},
      {"seed", h.seed},
      {"ticks", episode.records().size()},
      {"success", episode.footer() ? episode.footer()->success : false},
      {"action_dim", 17},
      {"cameras", cameras},
  };
  auto m = open("meta.json");
  m << meta.dump(2) << '\n';
}

}  // namespace mmteleop
