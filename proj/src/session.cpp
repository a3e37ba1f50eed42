#include "mmteleop/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "mmteleop/errors.hpp"
#include "mmteleop/script.hpp"
#include "mmteleop/simulator.hpp"
#include "mmteleop/websocket.hpp"

namespace mmteleop {

namespace {

constexpr std::size_t kActionQueueCapacity = 64;

struct LatencyStats {
  double mean_ms = 0.0;
  double p95_ms = 0.0;
};

LatencyStats stats_ms(std::vector<double> samples_ms) {
  LatencyStats s;
  if (samples_ms.empty()) return s;
  s.mean_ms = std::accumulate(samples_ms.begin(), samples_ms.end(), 0.0) / static_cast<double>(samples_ms.size());
  std::sort(samples_ms.begin(), samples_ms.end());
  const auto idx = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(samples_ms.size()))) - 1;
  s.p95_ms = samples_ms[std::min(idx, samples_ms.size() - 1)];
  return s;
}

std::vector<double> to_ms(const std::vector<TimestampUs>& us) {
  std::vector<double> out;
  out.reserve(us.size());
  for (TimestampUs u : us) out.push_back(static_cast<double>(u) / 1000.0);
  return out;
}

ChannelFrame control(ControlKind kind, Bytes body = {}) {
  return {MessageType::session_control, encode_control_payload({kind, std::move(body)})};
}

Bytes i64_body(TimestampUs t) {
  Bytes b;
  ByteWriter(b).i64(t);
  return b;
}

TimestampUs read_i64_body(const Bytes& body) {
  ByteReader r(body);
  return r.i64();
}

Bytes string_body(const std::string& s) { return {s.begin(), s.end()}; }

std::uint64_t config_digest(const std::string& text) {
  return fnv1a64({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

class Clock {
 public:
  Clock() : t0_(std::chrono::steady_clock::now()) {}
  void set_now(TimestampUs now) { t0_ = std::chrono::steady_clock::now() - std::chrono::microseconds(now); }
  TimestampUs now() const {
    return std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

int wait_ms(TimestampUs now, TimestampUs until) {
  if (until <= now) return 0;
  return static_cast<int>(std::min<TimestampUs>((until - now + 999) / 1000, 50));
}

void log(const SessionOptions& o, const std::string& msg) {
  if (o.log) o.log(msg);
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------

std::string SessionReport::to_json() const {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(final_hash));
  const nlohmann::json j = {
      {"task", task},
      {"mode", mode},
      {"completion_time_s", completion_time_s},
      {"success", success},
      {"quit", quit},
      {"ticks", ticks},
      {"actions_sent", actions_sent},
      {"actions_received", actions_received},
      {"actions_dropped", actions_dropped},
      {"observations_sent", observations_sent},
      {"observations_received", observations_received},
      {"heartbeats_received", heartbeats_received},
      {"frames_dropped", frames_dropped},
      {"integrity_errors", integrity_errors},
      {"safety_stops", safety_stops},
      {"filtered_fields", filtered_fields},
      {"latency_mean_ms", latency_mean_ms},
      {"latency_p95_ms", latency_p95_ms},
      {"rtt_mean_ms", rtt_mean_ms},
      {"rtt_p95_ms", rtt_p95_ms},
      {"final_hash", hash},
      {"record_path", record_path},
  };
  return j.dump();
}

SessionReport SessionReport::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  SessionReport r;
  r.task = j.value("task", "");
  r.mode = j.value("mode", "");
  r.completion_time_s = j.value("completion_time_s", 0.0);
  r.success = j.value("success", false);
  r.quit = j.value("quit", false);
  r.ticks = j.value("ticks", std::uint64_t{0});
  r.actions_sent = j.value("actions_sent", std::uint64_t{0});
  r.actions_received = j.value("actions_received", std::uint64_t{0});
  r.actions_dropped = j.value("actions_dropped", std::uint64_t{0});
  r.observations_sent = j.value("observations_sent", std::uint64_t{0});
  r.observations_received = j.value("observations_received", std::uint64_t{0});
  r.heartbeats_received = j.value("heartbeats_received", std::uint64_t{0});
  r.frames_dropped = j.value("frames_dropped", std::uint64_t{0});
  r.integrity_errors = j.value("integrity_errors", std::uint64_t{0});
  r.safety_stops = j.value("safety_stops", std::uint64_t{0});
  r.filtered_fields = j.value("filtered_fields", std::uint64_t{0});
  r.latency_mean_ms = j.value("latency_mean_ms", 0.0);
  r.latency_p95_ms = j.value("latency_p95_ms", 0.0);
  r.rtt_mean_ms = j.value("rtt_mean_ms", 0.0);
  r.rtt_p95_ms = j.value("rtt_p95_ms", 0.0);
  r.final_hash = std::stoull(j.value("final_hash", std::string("0")), nullptr, 16);
  r.record_path = j.value("record_path", "");
  return r;
}

// ---------------------------------------------------------------------------

OperatorSide::OperatorSide(const SessionConfig& config, std::vector<InputEvent> script, double quit_grace_s)
    : parsers_(make_parsers(config)), assignment_(config.assignment), events_(std::move(script)) {
  const TimestampUs last = events_.empty() ? 0 : events_.back().timestamp_us;
  quit_at_ = last + static_cast<TimestampUs>(std::llround(quit_grace_s * 1e6));
}

ActionCommand OperatorSide::tick(TimestampUs now) {
  for (; next_ < events_.size() && events_[next_].timestamp_us <= now; ++next_) {
    for (auto& p : parsers_) p->consume(events_[next_]);
  }
  std::vector<PartialCommand> partials;
  partials.reserve(parsers_.size());
  for (auto& p : parsers_) partials.push_back(p->tick(now));
  return composite_merge(partials, assignment_, now);
}

bool OperatorSide::finished(TimestampUs now) const { return next_ >= events_.size() && now >= quit_at_; }

// ---------------------------------------------------------------------------

RobotSide::RobotSide(const SessionConfig& config, std::string embodiment_yaml, std::string task_yaml,
                     std::optional<std::string> record_path, double tick_rate_hz)
    : spec_(parse_embodiment(embodiment_yaml)),
      task_(parse_task(task_yaml)),
      dt_(1.0 / tick_rate_hz),
      consolidator_(config.consolidation),
      renderer_(RenderOptions{.images = config.render_images}) {
  map_options_.ik.damping = config.ik_damping;
  map_options_.ik.tick_s = dt_;
  world_ = initial_world(task_, spec_, config.seed);
  status_ = check_task(world_, task_);
  header_.task_name = task_.name;
  header_.embodiment_name = spec_.name;
  header_.config_digest = config_digest(config.text);
  header_.tick_rate_hz = tick_rate_hz;
  header_.start_wall_clock_us = std::chrono::duration_cast<std::chrono::microseconds>(
                                    std::chrono::system_clock::now().time_since_epoch())
                                    .count();
  header_.seed = config.seed;
  header_.ik_damping = config.ik_damping;
  header_.task_yaml = std::move(task_yaml);
  header_.embodiment_yaml = std::move(embodiment_yaml);
  if (record_path) writer_ = std::make_unique<EpisodeWriter>(*record_path, header_);
}

ObservationFrame RobotSide::step(TimestampUs now, TickInfo* info) {
  ObservationFrame obs = renderer_.render(world_, spec_);
  const ActionCommand cmd = quantize(consolidator_.tick(now, normalized_torso(spec_, world_.joints.torso)));
  const ActionCommand usable = filter_unusable(cmd, spec_, &filter_stats_);
  world_ = mmteleop::step(world_, map_command(usable, world_.joints, spec_, map_options_), dt_, spec_);
  if (writer_) writer_->record_step(tick_, obs, cmd, world_hash(world_));
  if (info != nullptr) {
    info->tick = tick_;
    info->time_us = now;
    info->command = cmd;
  }
  ++tick_;
  status_ = check_task(world_, task_);
  return obs;
}

void RobotSide::finish(bool quit) {
  (void)quit;
  if (!writer_) return;
  const EpisodeFooter footer{world_hash(world_), status_.success, tick_};
  writer_->finish(footer.final_hash, footer.success);
  const auto dir = std::filesystem::path(writer_->path()).parent_path();
  append_manifest((dir.empty() ? std::filesystem::path("manifest.txt") : dir / "manifest.txt").string(),
                  writer_->path(), header_, footer);
}

std::uint64_t RobotSide::filtered_fields() const noexcept {
  return filter_stats_.removed_left_arm + filter_stats_.removed_right_arm + filter_stats_.removed_torso +
         filter_stats_.zeroed_lateral;
}

// ---------------------------------------------------------------------------

namespace {

struct Prepared {
  SessionConfig config;
  std::string embodiment_yaml;
  std::string task_yaml;
  double tick_rate_hz = 20.0;
  TimestampUs period_us = 50000;
  std::vector<InputEvent> script;
};

Prepared prepare(const SessionConfig& config, const SessionOptions& o) {
  Prepared p;
  p.config = config;
  if (o.task_path) p.config.task_path = *o.task_path;
  if (o.embodiment_path) p.config.embodiment_path = *o.embodiment_path;
  if (o.script_path) p.config.script_path = *o.script_path;
  p.tick_rate_hz = o.ticks_per_second.value_or(config.tick_rate_hz);
  if (!(p.tick_rate_hz >= 10.0 && p.tick_rate_hz <= 1000.0)) throw ConfigError("ticks per second must be in [10, 1000]");
  p.period_us = static_cast<TimestampUs>(std::llround(1e6 / p.tick_rate_hz));
  for (auto& d : p.config.devices) d.parser.tick_period_s = static_cast<double>(p.period_us) / 1e6;
  o.latency.validate();
  if (o.mode != SessionMode::connect) {
    p.embodiment_yaml = read_text_file(p.config.embodiment_path);
    p.task_yaml = read_text_file(p.config.task_path);
    try {
      parse_embodiment(p.embodiment_yaml);
    } catch (const ConfigError& e) {
      throw ConfigError(p.config.embodiment_path + ": " + e.what());
    }
    try {
      parse_task(p.task_yaml);
    } catch (const ConfigError& e) {
      throw ConfigError(p.config.task_path + ": " + e.what());
    }
  }
  if (o.mode != SessionMode::serve && p.config.script_path) p.script = load_script(*p.config.script_path);
  return p;
}

LatencyModel direction(const LatencyModel& m, std::uint64_t salt) {
  LatencyModel out = m;
  out.seed = m.seed * 0x9e3779b97f4a7c15ULL + salt;
  return out;
}

SessionReport run_local(const Prepared& p, const SessionOptions& o) {
  RobotSide robot(p.config, p.embodiment_yaml, p.task_yaml, o.record_path, p.tick_rate_hz);
  OperatorSide op(p.config, p.script, o.quit_grace_s);
  LatencyQueue<Bytes> uplink(direction(o.latency, 1));
  LatencyQueue<Bytes> downlink(direction(o.latency, 2));

  SessionReport r;
  r.mode = "local";
  r.task = robot.task().name;
  FrameDecoder robot_rx, operator_rx;
  for (std::uint64_t k = 0;; ++k) {
    const TimestampUs now = static_cast<TimestampUs>(k) * p.period_us;

    const ActionCommand cmd = op.tick(now);
    if (!cmd.empty()) {
      uplink.push(encode_frame(MessageType::action, encode_action_payload(cmd)), now);
      ++r.actions_sent;
    }
    for (auto& m : uplink.pop_ready(now)) {
      robot_rx.feed(m.value);
      while (auto f = robot_rx.next()) {
        if (f->type != MessageType::action) continue;
        robot.ingest(decode_action_payload(f->payload), now);
        ++r.actions_received;
      }
    }

    TickInfo info;
    const ObservationFrame obs = robot.step(now, &info);
    if (o.on_tick) o.on_tick(info);
    downlink.push(encode_frame(MessageType::observation, compress_observation(obs)), now);
    ++r.observations_sent;
    for (auto& m : downlink.pop_ready(now)) {
      operator_rx.feed(m.value);
      while (auto f = operator_rx.next()) {
        if (f->type != MessageType::observation) continue;
        (void)decompress_observation(f->payload);
        ++r.observations_received;
      }
    }

    if (robot.done()) break;
    if (op.finished(now)) {
      r.quit = true;
      break;
    }
  }
  robot.finish(r.quit);

  r.ticks = robot.ticks();
  r.completion_time_s = robot.world().sim_time;
  r.success = robot.status().success;
  r.final_hash = world_hash(robot.world());
  r.frames_dropped = uplink.dropped() + downlink.dropped();
  r.integrity_errors = robot_rx.integrity_errors() + operator_rx.integrity_errors();
  r.filtered_fields = robot.filtered_fields();
  const auto lat = stats_ms(to_ms(uplink.delays_us()));
  r.latency_mean_ms = lat.mean_ms;
  r.latency_p95_ms = lat.p95_ms;
  r.record_path = o.record_path.value_or("");
  return r;
}

// ---------------------------------------------------------------------------
// Network modes

/// Outgoing frames of one process, delayed by the latency model.
class Outbox {
 public:
  explicit Outbox(const LatencyModel& m) : queue_(m) {}

  void push(ChannelFrame f, TimestampUs now) { queue_.push(std::move(f), now); }
  void flush(Link& link, TimestampUs now) {
    for (auto& m : queue_.pop_ready(now)) link.send_frame(m.value);
  }
  void flush_all(Link& link) {
    while (auto t = queue_.next_delivery()) flush(link, *t);
  }
  std::optional<TimestampUs> next_delivery() const { return queue_.next_delivery(); }
  std::uint64_t dropped() const { return queue_.dropped(); }
  const std::vector<TimestampUs>& delays_us() const { return queue_.delays_us(); }

 private:
  LatencyQueue<ChannelFrame> queue_;
};

std::optional<ControlMessage> as_control(const ChannelFrame& f) {
  if (f.type != MessageType::session_control) return std::nullopt;
  return decode_control_payload(f.payload);
}

/// Waits for a control message of the given kind, returning frames that
/// arrived in between to the caller's inbox order.
std::optional<ControlMessage> await_control(Link& link, ControlKind kind, int timeout_ms) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  while (std::chrono::steady_clock::now() < deadline) {
    const bool open = link.pump(20);
    while (auto f = link.next()) {
      try {
        if (auto c = as_control(*f); c && c->kind == kind) return c;
      } catch (const IntegrityError&) {
      }
    }
    if (!open) return std::nullopt;
  }
  return std::nullopt;
}

class OperatorAcceptor {
 public:
  OperatorAcceptor(const SessionOptions& o) : tcp_(o.endpoint), web_root_(o.web_root) {
    if (o.ws_endpoint) ws_.emplace(*o.ws_endpoint);
  }

  std::uint16_t tcp_port() const { return tcp_.port(); }
  std::uint16_t ws_port() const { return ws_ ? ws_->port() : 0; }

  /// Accepts one operator connection within timeout_ms and completes the
  /// hello exchange.
  std::unique_ptr<Link> accept(int timeout_ms, const std::string& task_name) {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    while (std::chrono::steady_clock::now() < deadline) {
      std::unique_ptr<Link> link;
      if (auto s = tcp_.accept(ws_ ? 10 : 50)) {
        link = std::make_unique<TcpLink>(std::move(*s));
      } else if (ws_) {
        if (auto w = ws_->accept(10)) {
          try {
            link = WsLink::accept(std::move(*w), web_root_);
          } catch (const TransportError&) {
          }
        }
      }
      if (!link) continue;
      if (!await_control(*link, ControlKind::hello, 5000)) continue;
      try {
        link->send_frame(control(ControlKind::hello, string_body(task_name)));
      } catch (const TransportError&) {
        continue;
      }
      return link;
    }
    return nullptr;
  }

 private:
  Listener tcp_;
  std::optional<Listener> ws_;
  std::string web_root_;
};

SessionReport run_serve(const Prepared& p, const SessionOptions& o) {
  RobotSide robot(p.config, p.embodiment_yaml, p.task_yaml, o.record_path, p.tick_rate_hz);
  OperatorAcceptor acceptor(o);
  log(o, "listening on " + o.endpoint.host + ":" + std::to_string(acceptor.tcp_port()) +
             (o.ws_endpoint ? " (websocket :" + std::to_string(acceptor.ws_port()) + ")" : ""));
  if (o.on_listening) o.on_listening(acceptor.tcp_port(), acceptor.ws_port());

  SessionReport r;
  r.mode = "serve";
  r.task = robot.task().name;

  const int accept_ms = static_cast<int>(o.accept_timeout_s * 1000);
  std::unique_ptr<Link> link = acceptor.accept(accept_ms, r.task);
  if (!link) throw TransportError("no operator connected within " + std::to_string(o.accept_timeout_s) + " s");
  log(o, "operator connected");

  Clock clock;
  link->send_frame(control(ControlKind::start, i64_body(0)));
  Outbox out(direction(o.latency, 2));
  std::deque<ActionCommand> inbound;
  const TimestampUs hb_period = static_cast<TimestampUs>(std::llround(o.heartbeat_period_s * 1e6));
  const TimestampUs hb_timeout = hb_period * o.heartbeat_misses;
  TimestampUs last_heard = 0;
  TimestampUs next_hb = 0;
  bool stopped = false;
  std::uint64_t link_integrity = 0;
  std::uint64_t k = 0;

  const auto lose_link = [&](const std::string& why) {
    log(o, "operator link lost: " + why);
    link_integrity += link->integrity_errors();
    link.reset();
    inbound.clear();
    robot.safety_stop();
    ++r.safety_stops;
    stopped = true;
  };

  while (true) {
    TimestampUs now = clock.now();
    const TimestampUs tick_at = static_cast<TimestampUs>(k) * p.period_us;

    if (link) {
      TimestampUs until = tick_at;
      if (auto d = out.next_delivery()) until = std::min(until, *d);
      const bool open = link->pump(wait_ms(now, until));
      now = clock.now();
      while (auto f = link->next()) {
        last_heard = now;
        try {
          switch (f->type) {
            case MessageType::action:
              inbound.push_back(decode_action_payload(f->payload));
              ++r.actions_received;
              if (inbound.size() > kActionQueueCapacity) {
                inbound.pop_front();
                ++r.actions_dropped;
              }
              stopped = false;
              break;
            case MessageType::heartbeat:
              ++r.heartbeats_received;
              break;
            case MessageType::session_control: {
              const ControlMessage c = decode_control_payload(f->payload);
              if (c.kind == ControlKind::ping) out.push(control(ControlKind::pong, c.body), now);
              if (c.kind == ControlKind::quit) r.quit = true;
              break;
            }
            case MessageType::observation:
              break;
          }
        } catch (const IntegrityError&) {
          ++r.integrity_errors;
        }
      }
      try {
        out.flush(*link, now);
      } catch (const TransportError& e) {
        lose_link(e.what());
      }
      if (link && !open) lose_link("connection closed");
    } else {
      // Robot keeps ticking (stopped) while waiting for the operator to return.
      link = acceptor.accept(wait_ms(now, tick_at), r.task);
      now = clock.now();
      if (link) {
        log(o, "operator reconnected");
        link->send_frame(control(ControlKind::start, i64_body(now)));
        last_heard = now;
      }
    }

    if (!stopped && now - last_heard > hb_timeout) {
      log(o, "heartbeat timeout");
      robot.safety_stop();
      inbound.clear();
      ++r.safety_stops;
      stopped = true;
    }
    if (link && now >= next_hb) {
      out.push({MessageType::heartbeat, encode_heartbeat_payload(now)}, now);
      next_hb = now + hb_period;
    }

    if (now >= tick_at) {
      for (const ActionCommand& c : inbound) robot.ingest(c, tick_at);
      inbound.clear();
      TickInfo info;
      info.connected = link != nullptr;
      const ObservationFrame obs = robot.step(tick_at, &info);
      if (o.on_tick) o.on_tick(info);
      if (link) {
        out.push({MessageType::observation, compress_observation(obs)}, now);
        ++r.observations_sent;
      }
      ++k;
      if (robot.done() || r.quit) break;
    }
  }
  robot.finish(r.quit);

  r.ticks = robot.ticks();
  r.completion_time_s = robot.world().sim_time;
  r.success = robot.status().success;
  r.final_hash = world_hash(robot.world());
  r.frames_dropped = out.dropped();
  r.filtered_fields = robot.filtered_fields();
  r.record_path = o.record_path.value_or("");
  const auto lat = stats_ms(to_ms(out.delays_us()));
  r.latency_mean_ms = lat.mean_ms;
  r.latency_p95_ms = lat.p95_ms;
  if (link) {
    r.integrity_errors += link_integrity + link->integrity_errors();
    try {
      out.flush_all(*link);
      link->send_frame(control(ControlKind::end, string_body(r.to_json())));
      link->pump(100);
    } catch (const TransportError&) {
    }
  } else {
    r.integrity_errors += link_integrity;
  }
  return r;
}

std::unique_ptr<Link> dial(const SessionOptions& o, int attempts) {
  std::string last_error = "no attempt made";
  for (int i = 0; i < std::max(1, attempts); ++i) {
    if (i > 0) std::this_thread::sleep_for(std::chrono::milliseconds(i == 1 ? 200 : 1000));
    try {
      std::unique_ptr<Link> link;
      if (o.websocket_client) {
        link = WsLink::connect(o.endpoint);
      } else {
        link = std::make_unique<TcpLink>(connect_tcp(o.endpoint));
      }
      link->send_frame(control(ControlKind::hello, string_body("operator")));
      if (!await_control(*link, ControlKind::hello, 5000)) throw TransportError("no hello from server");
      return link;
    } catch (const TransportError& e) {
      last_error = e.what();
    }
  }
  throw TransportError("cannot connect to " + o.endpoint.to_string() + ": " + last_error);
}

SessionReport run_connect(const Prepared& p, const SessionOptions& o) {
  OperatorSide op(p.config, p.script, o.quit_grace_s);
  SessionReport r;
  r.mode = "connect";

  std::unique_ptr<Link> link = dial(o, o.connect_attempts);
  Clock clock;
  const auto start = await_control(*link, ControlKind::start, 10000);
  if (!start) throw TransportError("server did not start the session");
  clock.set_now(read_i64_body(start->body));
  log(o, "session started");

  Outbox out(direction(o.latency, 1));
  const TimestampUs hb_period = static_cast<TimestampUs>(std::llround(o.heartbeat_period_s * 1e6));
  TimestampUs next_hb = 0;
  bool quit_sent = false;
  bool ended = false;
  std::vector<double> rtt_ms;
  std::uint64_t k = static_cast<std::uint64_t>(clock.now() / p.period_us);
  std::uint64_t integrity = 0;
  std::optional<SessionReport> server_report;

  while (!ended) {
    TimestampUs now = clock.now();
    const TimestampUs tick_at = static_cast<TimestampUs>(k) * p.period_us;
    TimestampUs until = tick_at;
    if (auto d = out.next_delivery()) until = std::min(until, *d);
    bool open = link->pump(wait_ms(now, until));
    now = clock.now();
    while (auto f = link->next()) {
      try {
        switch (f->type) {
          case MessageType::observation:
            (void)decompress_observation(f->payload);
            ++r.observations_received;
            break;
          case MessageType::heartbeat:
            ++r.heartbeats_received;
            break;
          case MessageType::session_control: {
            const ControlMessage c = decode_control_payload(f->payload);
            if (c.kind == ControlKind::pong) {
              rtt_ms.push_back(static_cast<double>(now - read_i64_body(c.body)) / 1000.0);
            } else if (c.kind == ControlKind::end) {
              server_report = SessionReport::from_json(std::string(c.body.begin(), c.body.end()));
              ended = true;
            }
            break;
          }
          case MessageType::action:
            break;
        }
      } catch (const std::exception&) {
        ++r.integrity_errors;
      }
    }
    if (ended) break;

    try {
      if (now >= next_hb) {
        out.push({MessageType::heartbeat, encode_heartbeat_payload(now)}, now);
        out.push(control(ControlKind::ping, i64_body(now)), now);
        next_hb = now + hb_period;
      }
      while (now >= static_cast<TimestampUs>(k) * p.period_us) {
        const TimestampUs t = static_cast<TimestampUs>(k) * p.period_us;
        const ActionCommand cmd = op.tick(t);
        if (!cmd.empty()) {
          out.push({MessageType::action, encode_action_payload(cmd)}, now);
          ++r.actions_sent;
        }
        ++k;
      }
      if (!quit_sent && op.finished(now)) {
        out.push(control(ControlKind::quit), now);
        quit_sent = true;
      }
      out.flush(*link, now);
    } catch (const TransportError&) {
      open = false;
    }

    if (!open) {
      integrity += link->integrity_errors();
      log(o, "connection lost, reconnecting");
      link = dial(o, o.reconnect_attempts);
      const auto restart = await_control(*link, ControlKind::start, 10000);
      if (!restart) throw TransportError("server did not resume the session");
      clock.set_now(read_i64_body(restart->body));
    }
  }

  r.integrity_errors += integrity + link->integrity_errors();
  r.frames_dropped = out.dropped();
  const auto rtt = stats_ms(rtt_ms);
  r.rtt_mean_ms = rtt.mean_ms;
  r.rtt_p95_ms = rtt.p95_ms;
  r.latency_mean_ms = rtt.mean_ms / 2.0;
  r.latency_p95_ms = rtt.p95_ms / 2.0;
  r.quit = quit_sent;
  if (server_report) {
    r.task = server_report->task;
    r.success = server_report->success;
    r.completion_time_s = server_report->completion_time_s;
    r.ticks = server_report->ticks;
    r.final_hash = server_report->final_hash;
    r.actions_received = server_report->actions_received;
    r.safety_stops = server_report->safety_stops;
    r.record_path = server_report->record_path;
  }
  return r;
}

}  // namespace

SessionReport run_session(const SessionConfig& config, const SessionOptions& options) {
  const Prepared p = prepare(config, options);
  switch (options.mode) {
    case SessionMode::local:
      return run_local(p, options);
    case SessionMode::serve:
      return run_serve(p, options);
    case SessionMode::connect:
      return run_connect(p, options);
  }
  return {};
}

}  // namespace mmteleop
