#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mmteleop/consolidation.hpp"
#include "mmteleop/latency.hpp"
#include "mmteleop/recorder.hpp"
#include "mmteleop/renderer.hpp"
#include "mmteleop/robot_interface.hpp"
#include "mmteleop/session_config.hpp"
#include "mmteleop/task.hpp"
#include "mmteleop/transport.hpp"

namespace mmteleop {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitDivergence = 1,
  kExitConfig = 2,
  kExitConnection = 3,
};

enum class SessionMode : std::uint8_t { local, serve, connect };

/// What the robot side did on one control tick, for tests and logging.
struct TickInfo {
  std::uint64_t tick = 0;
  TimestampUs time_us = 0;
  ActionCommand command;  // consolidated, before embodiment filtering
  bool connected = true;
};

struct SessionOptions {
  SessionMode mode = SessionMode::local;
  Endpoint endpoint;                  // serve: bind address; connect: server address
  bool websocket_client = false;      // connect over WebSocket instead of raw TCP
  std::optional<Endpoint> ws_endpoint;  // serve: also accept WebSocket operators here
  std::string web_root;               // static files served next to the WebSocket endpoint
  LatencyModel latency;               // applied to this process's outgoing direction(s)
  std::optional<std::string> record_path;
  std::optional<std::string> script_path;
  std::optional<std::string> task_path;
  std::optional<std::string> embodiment_path;
  std::optional<double> ticks_per_second;
  double quit_grace_s = 2.0;          // operator quits this long after its script ends
  double heartbeat_period_s = 1.0;
  int heartbeat_misses = 3;
  int connect_attempts = 3;
  int reconnect_attempts = 5;
  double accept_timeout_s = 60.0;
  std::function<void(std::uint16_t tcp_port, std::uint16_t ws_port)> on_listening;
  std::function<void(const TickInfo&)> on_tick;
  std::function<void(const std::string&)> log;
};

struct SessionReport {
  std::string task;
  std::string mode;
  double completion_time_s = 0.0;
  bool success = false;
  bool quit = false;
  std::uint64_t ticks = 0;
  std::uint64_t actions_sent = 0;
  std::uint64_t actions_received = 0;
  std::uint64_t actions_dropped = 0;      // bounded queue overflow
  std::uint64_t observations_sent = 0;
  std::uint64_t observations_received = 0;
  std::uint64_t heartbeats_received = 0;
  std::uint64_t frames_dropped = 0;       // latency-model drops
  std::uint64_t integrity_errors = 0;
  std::uint64_t safety_stops = 0;
  std::uint64_t filtered_fields = 0;
  double latency_mean_ms = 0.0;           // one-way; RTT/2 when measured by ping
  double latency_p95_ms = 0.0;
  double rtt_mean_ms = 0.0;
  double rtt_p95_ms = 0.0;
  std::uint64_t final_hash = 0;
  std::string record_path;

  std::string to_json() const;
  static SessionReport from_json(const std::string& text);
};

/// Operator side: device parsers fed from a scripted event stream, merged per
/// the assignment table.
class OperatorSide {
 public:
  OperatorSide(const SessionConfig& config, std::vector<InputEvent> script, double quit_grace_s);

  /// Feeds every event stamped <= now, then merges one tick of partials.
  ActionCommand tick(TimestampUs now);
  /// All events consumed and the grace period has passed.
  bool finished(TimestampUs now) const;

 private:
  std::vector<std::unique_ptr<Parser>> parsers_;
  Assignment assignment_;
  std::vector<InputEvent> events_;
  std::size_t next_ = 0;
  TimestampUs quit_at_ = 0;
};

/// Robot side: consolidation, embodiment mapping, simulation, rendering and
/// recording at a fixed tick.
class RobotSide {
 public:
  RobotSide(const SessionConfig& config, std::string embodiment_yaml, std::string task_yaml,
            std::optional<std::string> record_path, double tick_rate_hz);

  void ingest(const ActionCommand& cmd, TimestampUs received_us) { consolidator_.ingest(cmd, received_us); }
  /// Renders the current state, executes one consolidated command and
  /// advances the world by one tick.
  ObservationFrame step(TimestampUs now, TickInfo* info = nullptr);
  void safety_stop() { consolidator_.safety_stop(); }
  /// Writes the episode footer and manifest line if recording.
  void finish(bool quit);

  bool done() const noexcept { return status_.done; }
  const TaskStatus& status() const noexcept { return status_; }
  const WorldState& world() const noexcept { return world_; }
  const TaskSpec& task() const noexcept { return task_; }
  const EmbodimentSpec& embodiment() const noexcept { return spec_; }
  std::uint64_t ticks() const noexcept { return tick_; }
  std::uint64_t filtered_fields() const noexcept;

 private:
  EmbodimentSpec spec_;
  TaskSpec task_;
  double dt_;
  MapOptions map_options_;
  Consolidator consolidator_;
  Renderer renderer_;
  WorldState world_;
  TaskStatus status_;
  FilterStats filter_stats_;
  std::uint64_t tick_ = 0;
  EpisodeHeader header_;
  std::unique_ptr<EpisodeWriter> writer_;
};

std::string read_text_file(const std::string& path);

/// Runs one session. Throws ConfigError for invalid inputs and
/// TransportError when a connection cannot be (re)established.
SessionReport run_session(const SessionConfig& config, const SessionOptions& options);

}  // namespace mmteleop
