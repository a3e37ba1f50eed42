#include <sys/wait.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <mutex>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "helpers.hpp"
#include "mmteleop/errors.hpp"
#include "mmteleop/session.hpp"
#include "mmteleop/wire.hpp"

using namespace mmteleop;
namespace fs = std::filesystem;
using steady = std::chrono::steady_clock;

namespace {

const std::string kSession = testutil::data_path("sessions/keyboard_pick_pot.yaml");

fs::path temp_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("mmteleop_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Runs the CLI and returns its exit status; stdout goes to `out`.
int cli(const std::string& args, const fs::path& out) {
  const std::string cmd = std::string(MMTELEOP_CLI) + " " + args + " >" + out.string() + " 2>" + out.string() + ".err";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

ChannelFrame control_frame(ControlKind kind, const Bytes& body = {}) {
  return {MessageType::session_control, encode_control_payload(ControlMessage{kind, body})};
}

}  // namespace

TEST_CASE("local session: scripted pick pot succeeds and replays") {
  const fs::path d = temp_dir("local_session");
  SessionOptions o;
  o.record_path = (d / "pick.tmep").string();
  const SessionReport r = run_session(load_session_config(kSession), o);
  CHECK(r.success);
  CHECK(r.completion_time_s < 60.0);
  CHECK(r.ticks > 0);
  CHECK(r.safety_stops == 0);

  const Episode ep = Episode::load(*o.record_path);
  CHECK(ep.size() == r.ticks);
  CHECK(ep.footer()->final_hash == r.final_hash);
  CHECK(ep.footer()->success);
  const ReplayResult rr = replay(ep);
  CHECK(rr.matches);
  CHECK(rr.success);
  CHECK(fs::exists(d / "manifest.txt"));

  // simulated clock: a second run is bit-identical
  CHECK(run_session(load_session_config(kSession), SessionOptions{}).final_hash == r.final_hash);
}

TEST_CASE("local session under 150 +- 50 ms injected latency") {
  SessionOptions o;
  o.latency = LatencyModel::parse("150,50,0,3");
  const SessionReport r = run_session(load_session_config(kSession), o);
  CHECK(r.success);
  CHECK(r.completion_time_s < 60.0);
  CHECK(r.latency_mean_ms == doctest::Approx(150.0).epsilon(0.15));
}

TEST_CASE("serve and connect over loopback with injected latency") {
  const fs::path d = temp_dir("loopback_session");
  std::promise<std::uint16_t> port;
  SessionOptions server;
  server.mode = SessionMode::serve;
  server.endpoint = {"127.0.0.1", 0};
  server.latency = LatencyModel::parse("150,50,0,11");
  server.record_path = (d / "served.tmep").string();
  server.accept_timeout_s = 10;
  server.on_listening = [&](std::uint16_t tcp, std::uint16_t) { port.set_value(tcp); };

  const auto start = steady::now();
  auto served = std::async(std::launch::async, [&] { return run_session(load_session_config(kSession), server); });
  SessionOptions client;
  client.mode = SessionMode::connect;
  client.endpoint = {"127.0.0.1", port.get_future().get()};
  client.latency = LatencyModel::parse("150,50,0,12");
  const SessionReport c = run_session(load_session_config(kSession), client);
  const SessionReport s = served.get();
  const double wall = std::chrono::duration<double>(steady::now() - start).count();

  CHECK(s.success);
  CHECK(c.success);
  CHECK(c.final_hash == s.final_hash);
  CHECK(s.actions_received > 0);
  CHECK(c.observations_received > 0);
  CHECK(s.integrity_errors == 0);
  CHECK(c.rtt_mean_ms > 200.0);  // two injected legs
  CHECK(wall < 60.0);

  const ReplayResult rr = replay(Episode::load(*server.record_path));
  CHECK(rr.matches);
  CHECK(rr.final_hash == s.final_hash);
}

TEST_CASE("killed operator: robot falls back to a zero command within 3 s") {
  const fs::path d = temp_dir("kill_session");
  std::string task = slurp(testutil::data_path("tasks/pick_pot.yaml"));
  task.replace(task.find("time_limit: 60"), 14, "time_limit: 5");
  std::ofstream(d / "short.yaml") << task;

  struct Sample {
    steady::time_point at;
    bool moving;
  };
  std::mutex mu;
  std::vector<Sample> samples;
  std::promise<std::uint16_t> port;
  SessionOptions server;
  server.mode = SessionMode::serve;
  server.endpoint = {"127.0.0.1", 0};
  server.task_path = (d / "short.yaml").string();
  server.accept_timeout_s = 10;
  server.on_listening = [&](std::uint16_t tcp, std::uint16_t) { port.set_value(tcp); };
  server.on_tick = [&](const TickInfo& t) {
    const bool moving = t.command.base && !(t.command.base->value == BaseVelocity{});
    std::lock_guard lock(mu);
    samples.push_back({steady::now(), moving});
  };
  auto served = std::async(std::launch::async, [&] { return run_session(load_session_config(kSession), server); });

  steady::time_point killed;
  {
    TcpLink link(connect_tcp({"127.0.0.1", port.get_future().get()}));
    link.send_frame(control_frame(ControlKind::hello));
    ActionCommand drive;
    drive.base = Sourced<BaseVelocity>{{0.3, 0, 0}, "kb"};
    const Bytes payload = encode_action_payload(drive);
    for (int i = 0; i < 20; ++i) {
      link.send_frame({MessageType::action, payload});
      link.pump(50);
      while (link.next()) {
      }
    }
    killed = steady::now();
  }  // socket closed without quit

  const SessionReport r = served.get();
  CHECK(r.safety_stops >= 1);
  CHECK_FALSE(r.quit);

  std::lock_guard lock(mu);
  bool moved_before = false;
  std::optional<double> stop_after;
  for (const Sample& s : samples) {
    if (s.at < killed) {
      moved_before = moved_before || s.moving;
    } else if (!s.moving && !stop_after) {
      stop_after = std::chrono::duration<double>(s.at - killed).count();
    } else if (s.moving && stop_after) {
      stop_after = std::nullopt;  // moving again after a zero tick: not a stop
    }
  }
  CHECK(moved_before);
  REQUIRE(stop_after);
  CHECK(*stop_after < 3.0);
}

TEST_CASE("sessions reject bad inputs") {
  SessionOptions o;
  o.ticks_per_second = 5;
  CHECK_THROWS_AS(run_session(load_session_config(kSession), o), ConfigError);
  o = {};
  o.task_path = "/nonexistent/task.yaml";
  CHECK_THROWS_AS(run_session(load_session_config(kSession), o), ConfigError);

  std::uint16_t closed = 0;
  {
    Listener probe({"127.0.0.1", 0});
    closed = probe.port();
  }
  o = {};
  o.mode = SessionMode::connect;
  o.endpoint = {"127.0.0.1", closed};
  o.connect_attempts = 2;
  CHECK_THROWS_AS(run_session(load_session_config(kSession), o), TransportError);
}

// ---------------------------------------------------------------------------
// Command-line tool

TEST_CASE("cli: run, replay across processes, exit codes") {
  const fs::path d = temp_dir("cli");
  const std::string ep = (d / "run.tmep").string();
  REQUIRE(cli("run --config " + kSession + " --record " + ep + " --quiet", d / "run.json") == kExitOk);
  const SessionReport r = SessionReport::from_json(slurp(d / "run.json"));
  CHECK(r.success);
  CHECK(fs::exists(ep + ".report.json"));

  CHECK(cli("replay " + ep, d / "replay1.txt") == kExitOk);
  CHECK(cli("replay " + ep, d / "replay2.txt") == kExitOk);
  const std::string first = slurp(d / "replay1.txt");
  CHECK(first == slurp(d / "replay2.txt"));
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(r.final_hash));
  CHECK(first.find(hex) != std::string::npos);
  CHECK(first.find("match") != std::string::npos);

  // perturb one recorded action: divergence, exit 1
  Episode bad = Episode::load(ep);
  bad.mutable_records()[40].action.base = Sourced<BaseVelocity>{{0.2, 0, 0}, "kb"};
  bad.save((d / "bad.tmep").string());
  CHECK(cli("replay " + (d / "bad.tmep").string(), d / "bad.txt") == kExitDivergence);
  CHECK(slurp(d / "bad.txt").find("divergence at tick") != std::string::npos);

  std::ofstream(d / "junk.tmep") << "not an episode";
  CHECK(cli("replay " + (d / "junk.tmep").string(), d / "junk.txt") == kExitConfig);

  CHECK(cli("export " + ep + " " + (d / "export").string(), d / "export.txt") == kExitOk);
  CHECK(fs::exists(d / "export" / "actions.f32"));
}

TEST_CASE("cli: configuration and connection failures") {
  const fs::path d = temp_dir("cli_errors");
  // two devices claiming the same part
  std::string cfg = slurp(kSession);
  const std::string base_dir = fs::path(kSession).parent_path().string();
  for (std::size_t at = 0; (at = cfg.find(": ../", at)) != std::string::npos; at += base_dir.size()) {
    cfg.insert(at + 2, base_dir + "/");
  }
  cfg += "  - {id: pad1, type: sixdof, controls: [base]}\n  - {id: pad2, type: sixdof, controls: [base]}\n";
  std::ofstream(d / "dup.yaml") << cfg;
  const int dup = cli("run --config " + (d / "dup.yaml").string() + " --quiet", d / "dup.txt");
  CHECK(dup == kExitConfig);

  CHECK(cli("run --config /nonexistent.yaml", d / "missing.txt") == kExitConfig);
  CHECK(cli("run --config " + kSession + " --ticks-per-second 5000", d / "rate.txt") == kExitConfig);
  CHECK(cli("bogus", d / "bogus.txt") == kExitConfig);

  std::uint16_t closed = 0;
  {
    Listener probe({"127.0.0.1", 0});
    closed = probe.port();
  }
  CHECK(cli("run --config " + kSession + " --mode connect --endpoint 127.0.0.1:" + std::to_string(closed),
            d / "closed.txt") == kExitConnection);
}
