#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "mmteleop/errors.hpp"
#include "mmteleop/recorder.hpp"
#include "mmteleop/renderer.hpp"
#include "mmteleop/simulator.hpp"
#include "mmteleop/task.hpp"

using namespace mmteleop;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("mmteleop_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

ObservationFrame random_obs(std::mt19937_64& rng, int w, int h) {
  ObservationFrame f;
  RgbImage rgb{"head", static_cast<std::uint16_t>(w), static_cast<std::uint16_t>(h), {}};
  DepthImage depth{"head", static_cast<std::uint16_t>(w), static_cast<std::uint16_t>(h), {}};
  rgb.data.resize(static_cast<std::size_t>(w * h * 3));
  depth.data.resize(static_cast<std::size_t>(w * h));
  // smooth gradients plus noise, like a rendered scene
  for (int i = 0; i < w * h; ++i) {
    const auto base = static_cast<std::uint8_t>((i % w) * 2);
    rgb.data[static_cast<std::size_t>(3 * i)] = base;
    rgb.data[static_cast<std::size_t>(3 * i + 1)] = static_cast<std::uint8_t>(base + (rng() & 3));
    rgb.data[static_cast<std::size_t>(3 * i + 2)] = static_cast<std::uint8_t>(rng());
    depth.data[static_cast<std::size_t>(i)] = static_cast<std::uint16_t>(1000 + i / w + (rng() & 7));
  }
  f.rgb.push_back(std::move(rgb));
  f.depth.push_back(std::move(depth));
  f.right_ee = testutil::random_pose(rng);
  f.right_gripper = testutil::uniform(rng, 0, 1);
  f.base_odom_delta = {testutil::uniform(rng, -0.1, 0.1), 0.0, testutil::uniform(rng, -0.1, 0.1)};
  f.sim_time = testutil::uniform(rng, 0, 10);
  return f;
}

/// Runs random commands through the simulator exactly as the robot side does.
Episode simulate(int ticks, std::uint64_t seed) {
  const std::string emb_yaml = slurp(testutil::data_path("embodiments/tiago_like.yaml"));
  const std::string task_yaml = slurp(testutil::data_path("tasks/pick_pot.yaml"));
  const EmbodimentSpec spec = parse_embodiment(emb_yaml);
  const TaskSpec task = parse_task(task_yaml);
  EpisodeHeader h;
  h.task_name = task.name;
  h.embodiment_name = spec.name;
  h.seed = seed;
  h.tick_rate_hz = 20;
  h.task_yaml = task_yaml;
  h.embodiment_yaml = emb_yaml;
  Episode ep(h);
  MapOptions opt;
  opt.ik.tick_s = 0.05;
  RenderOptions ro;
  ro.images = false;
  Renderer renderer(ro);
  std::mt19937_64 rng(seed * 7 + 1);
  WorldState w = initial_world(task, spec, seed);
  for (int t = 0; t < ticks; ++t) {
    ActionCommand cmd = testutil::random_command(rng);
    cmd.right_arm->value = cmd.right_arm->value.scaled(0.05, 0.1);
    cmd.left_arm->value = cmd.left_arm->value.scaled(0.05, 0.1);
    cmd.base->value = {cmd.base->value.vx * 0.5, 0.0, cmd.base->value.wz * 0.5};  // inside the base limits
    cmd = quantize(cmd);
    const ObservationFrame obs = renderer.render(w, spec);
    w = step(w, map_command(filter_unusable(cmd, spec), w.joints, spec, opt), 0.05, spec);
    ep.record_step(static_cast<std::uint64_t>(t), obs, cmd, world_hash(w));
  }
  ep.finish(world_hash(w), check_task(w, task).success);
  return ep;
}

}  // namespace

TEST_CASE("record_step: contiguous ticks only") {
  Episode ep;
  for (std::uint64_t t = 0; t < 3; ++t) ep.record_step(t, {}, {}, 0);
  CHECK(ep.size() == 3);
  CHECK_THROWS_AS(ep.record_step(5, {}, {}, 0), SequencingError);
  CHECK(ep.size() == 3);
  Episode fresh;
  CHECK_THROWS_AS(fresh.record_step(1, {}, {}, 0), SequencingError);

  const fs::path d = temp_dir("writer_seq");
  EpisodeWriter w((d / "e.tmep").string(), {});
  w.record_step(0, {}, {}, 0);
  CHECK_THROWS_AS(w.record_step(2, {}, {}, 0), SequencingError);
}

TEST_CASE("200-tick 128x128 RGB-D episode decodes bit-identically") {
  std::mt19937_64 rng(61);
  EpisodeHeader h;
  h.task_name = "round_trip";
  h.embodiment_name = "none";
  h.config_digest = 0x1234;
  h.start_wall_clock_us = 1700000000000000;
  h.task_yaml = "name: x";
  Episode ep(h);
  const fs::path d = temp_dir("roundtrip");
  const std::string path = (d / "e.tmep").string();
  EpisodeWriter writer(path, h);
  for (std::uint64_t t = 0; t < 200; ++t) {
    const ObservationFrame obs = random_obs(rng, 128, 128);
    const ActionCommand cmd = quantize(testutil::random_command(rng));
    ep.record_step(t, obs, cmd, rng());
    writer.record_step(t, obs, cmd, ep.records().back().world_hash);
  }
  ep.finish(99, true);
  writer.finish(99, true);

  const Episode back = Episode::load(path);
  CHECK(back.header() == ep.header());
  CHECK(back.records() == ep.records());
  CHECK(back.footer() == ep.footer());
  // streamed and in-memory writers produce the same bytes
  const Bytes mem = ep.serialize();
  const std::string disk = slurp(path);
  CHECK(mem.size() == disk.size());
  CHECK(std::string(mem.begin(), mem.end()) == disk);
  CHECK(back.records()[17].vector == flatten(ep.records()[17].action));
}

TEST_CASE("corrupt and truncated episodes are rejected") {
  const Episode ep = simulate(10, 3);
  const Bytes b = ep.serialize();
  CHECK_THROWS_AS(Episode::deserialize(std::span(b).first(b.size() - 3)), IntegrityError);
  Bytes flipped = b;
  flipped[b.size() / 2] ^= 0x10;
  CHECK_THROWS_AS(Episode::deserialize(flipped), IntegrityError);
  CHECK_THROWS_AS(Episode::deserialize(Bytes{}), IntegrityError);

  // footer count disagrees with the records
  Episode lying = ep;
  lying.mutable_records().pop_back();
  CHECK_THROWS(Episode::deserialize(lying.serialize()));
  CHECK_THROWS(Episode::load("/nonexistent/episode.tmep"));
}

TEST_CASE("replay reproduces the recorded hashes") {
  const Episode ep = simulate(120, 5);
  const ReplayResult r = replay(ep);
  CHECK(r.matches);
  CHECK(r.ticks == 120);
  CHECK(r.final_hash == ep.footer()->final_hash);
  CHECK_FALSE(r.first_divergent_tick);

  // and again through the file
  const fs::path d = temp_dir("replay");
  ep.save((d / "e.tmep").string());
  CHECK(replay(Episode::load((d / "e.tmep").string())).final_hash == r.final_hash);
}

TEST_CASE("replay: perturbed action diverges at or after the perturbed tick") {
  const Episode ep = simulate(80, 6);
  for (std::uint64_t k : {0u, 17u, 63u}) {
    Episode bad = ep;
    ActionCommand& a = bad.mutable_records()[k].action;
    a.base->value.vx += 1e-3;
    const ReplayResult r = replay(bad);
    CHECK_FALSE(r.matches);
    REQUIRE(r.first_divergent_tick);
    CHECK(*r.first_divergent_tick >= k);
  }
  // footer-only mismatch reports the tick count
  Episode lied = ep;
  lied.finish(ep.footer()->final_hash ^ 1, ep.footer()->success);
  const ReplayResult r = replay(lied);
  CHECK_FALSE(r.matches);
  CHECK(r.first_divergent_tick == 80u);
}

TEST_CASE("export writes flat arrays and leaves the episode untouched") {
  std::mt19937_64 rng(62);
  Episode ep;
  for (std::uint64_t t = 0; t < 5; ++t) {
    ActionCommand c = quantize(testutil::random_command(rng));
    if (t == 2) c.torso.reset();
    ep.record_step(t, random_obs(rng, 16, 8), c, t);
  }
  ep.finish(1, false);
  const Bytes before = ep.serialize();

  const fs::path a = temp_dir("export_a"), b = temp_dir("export_b");
  export_episode(ep, a.string());
  export_episode(ep, b.string());
  CHECK(ep.serialize() == before);
  for (const char* name : {"actions.f32", "torso.f32", "proprio.csv", "rgb_head.u8", "depth_head.u16", "meta.json"}) {
    CHECK(fs::exists(a / name));
    CHECK(slurp(a / name) == slurp(b / name));
  }
  CHECK(fs::file_size(a / "actions.f32") == 5 * 17 * sizeof(float));
  CHECK(fs::file_size(a / "rgb_head.u8") == 5 * 16 * 8 * 3);
  CHECK(fs::file_size(a / "depth_head.u16") == 5 * 16 * 8 * 2);

  const std::string torso = slurp(a / "torso.f32");
  float t2 = 0;
  std::memcpy(&t2, torso.data() + 2 * sizeof(float), sizeof t2);
  CHECK(std::isnan(t2));
  const std::string actions = slurp(a / "actions.f32");
  float first[17];
  std::memcpy(first, actions.data(), sizeof first);
  const ActionVector17 v = flatten(ep.records()[0].action);
  for (int i = 0; i < 17; ++i) CHECK(first[i] == v[static_cast<std::size_t>(i)]);
}

TEST_CASE("manifest lines append") {
  const fs::path d = temp_dir("manifest");
  const std::string m = (d / "manifest.txt").string();
  EpisodeHeader h;
  h.task_name = "pick_pot";
  append_manifest(m, "a.tmep", h, {0xabc, true, 10});
  append_manifest(m, "b.tmep", h, {0x1, false, 3});
  CHECK(slurp(m) == "a.tmep\tpick_pot\tsuccess\t10\t0000000000000abc\nb.tmep\tpick_pot\tfailure\t3\t0000000000000001\n");
}
