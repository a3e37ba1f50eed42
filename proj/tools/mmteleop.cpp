// mmteleop: run teleoperation sessions, replay and export episodes.
//
// Exit codes: 0 ok, 1 replay divergence, 2 bad config or unreadable episode,
// 3 connection failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "mmteleop/errors.hpp"
#include "mmteleop/recorder.hpp"
#include "mmteleop/session.hpp"

using namespace mmteleop;

namespace {

int cmd_run(const std::string& config_path, SessionOptions opts, bool quiet) {
  const SessionConfig config = load_session_config(config_path);
  if (!quiet) opts.log = [](const std::string& m) { std::cerr << "[mmteleop] " << m << "\n"; };
  opts.on_listening = [](std::uint16_t tcp, std::uint16_t ws) {
    std::cerr << "[mmteleop] port " << tcp;
    if (ws != 0) std::cerr << " ws " << ws;
    std::cerr << std::endl;
  };
  const SessionReport report = run_session(config, opts);
  const std::string json = report.to_json();
  std::cout << json << std::endl;
  if (opts.record_path) {
    std::ofstream(*opts.record_path + ".report.json") << json << "\n";
  }
  return kExitOk;
}

int cmd_replay(const std::string& path) {
  Episode episode;
  try {
    episode = Episode::load(path);
  } catch (const std::exception& e) {
    std::cerr << "cannot read episode: " << e.what() << "\n";
    return kExitConfig;
  }
  ReplayResult r;
  try {
    r = replay(episode);
  } catch (const ConfigError& e) {
    std::cerr << "episode has invalid embedded config: " << e.what() << "\n";
    return kExitConfig;
  }
  std::printf("ticks %llu final %016llx recorded %016llx\n", static_cast<unsigned long long>(r.ticks),
              static_cast<unsigned long long>(r.final_hash), static_cast<unsigned long long>(r.recorded_hash));
  if (r.matches) {
    std::printf("match\n");
    return kExitOk;
  }
  std::printf("divergence at tick %llu\n", static_cast<unsigned long long>(r.first_divergent_tick.value_or(r.ticks)));
  return kExitDivergence;
}

int cmd_export(const std::string& path, const std::string& out_dir) {
  Episode episode;
  try {
    episode = Episode::load(path);
  } catch (const std::exception& e) {
    std::cerr << "cannot read episode: " << e.what() << "\n";
    return kExitConfig;
  }
  export_episode(episode, out_dir);
  std::printf("exported %zu ticks to %s\n", episode.size(), out_dir.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Whole-body mobile manipulation teleoperation"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a teleoperation session");
  std::string config_path, mode = "local", endpoint = "127.0.0.1:7600", ws_endpoint, web_root, latency;
  std::string task, embodiment, record, script;
  double tps = 0.0, accept_timeout = 60.0;
  bool use_ws = false, quiet = false;
  run->add_option("--config", config_path, "session config YAML")->required();
  run->add_option("--mode", mode, "local, serve or connect")->check(CLI::IsMember({"local", "serve", "connect"}));
  run->add_option("--endpoint", endpoint, "serve: bind host:port; connect: server host:port");
  run->add_option("--ws-endpoint", ws_endpoint, "serve: also accept WebSocket operators on host:port");
  run->add_option("--web-root", web_root, "serve: static files for browser consoles");
  run->add_flag("--ws", use_ws, "connect: use the WebSocket transport");
  run->add_option("--task", task, "override the task file");
  run->add_option("--embodiment", embodiment, "override the embodiment file");
  run->add_option("--record", record, "episode output path (.tmep)");
  run->add_option("--latency", latency, "injected latency: base_ms,jitter_ms,drop[,seed]");
  run->add_option("--script", script, "scripted input events (NDJSON)");
  run->add_option("--ticks-per-second", tps, "control loop rate");
  run->add_option("--accept-timeout", accept_timeout, "serve: seconds to wait for an operator");
  run->add_flag("--quiet", quiet, "no log output");

  auto* rep = app.add_subcommand("replay", "re-execute an episode and compare world hashes");
  std::string episode_path;
  rep->add_option("episode", episode_path)->required();

  auto* exp = app.add_subcommand("export", "write an episode as flat arrays");
  std::string export_dir;
  exp->add_option("episode", episode_path)->required();
  exp->add_option("out_dir", export_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*rep) return cmd_replay(episode_path);
    if (*exp) return cmd_export(episode_path, export_dir);

    SessionOptions opts;
    opts.mode = mode == "serve" ? SessionMode::serve : mode == "connect" ? SessionMode::connect : SessionMode::local;
    opts.endpoint = parse_endpoint(endpoint);
    opts.websocket_client = use_ws;
    if (!ws_endpoint.empty()) opts.ws_endpoint = parse_endpoint(ws_endpoint);
    opts.web_root = web_root;
    if (!latency.empty()) opts.latency = LatencyModel::parse(latency);
    if (!task.empty()) opts.task_path = task;
    if (!embodiment.empty()) opts.embodiment_path = embodiment;
    if (!record.empty()) opts.record_path = record;
    if (!script.empty()) opts.script_path = script;
    if (tps > 0.0) opts.ticks_per_second = tps;
    opts.accept_timeout_s = accept_timeout;
    return cmd_run(config_path, std::move(opts), quiet);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TransportError& e) {
    std::cerr << "connection error: " << e.what() << "\n";
    return kExitConnection;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}
