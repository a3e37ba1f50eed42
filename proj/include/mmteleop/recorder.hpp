#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "mmteleop/action.hpp"
#include "mmteleop/observation.hpp"
#include "mmteleop/wire.hpp"

namespace mmteleop {

// A .tmep episode is a plain sequence of session-control ChannelFrames:
//   one episode_header, then one episode_record per tick, then one
//   episode_footer. Byte layouts are in docs/episode_format.md.

struct EpisodeHeader {
  std::string task_name;
  std::string embodiment_name;
  std::uint64_t config_digest = 0;    // FNV-1a of the session config text
  double tick_rate_hz = 20.0;
  std::int64_t start_wall_clock_us = 0;  // microseconds since the Unix epoch
  std::uint64_t seed = 0;
  double ik_damping = 0.05;
  std::string task_yaml;        // embedded so replay needs only the episode file
  std::string embodiment_yaml;

  bool operator==(const EpisodeHeader&) const = default;
};

struct EpisodeRecord {
  std::uint64_t tick = 0;
  ObservationFrame observation;  // observed before the action is applied
  ActionCommand action;          // consolidated command executed this tick
  ActionVector17 vector{};
  std::uint64_t world_hash = 0;  // world state after the step

  bool operator==(const EpisodeRecord&) const = default;
};

struct EpisodeFooter {
  std::uint64_t final_hash = 0;
  bool success = false;
  std::uint64_t tick_count = 0;

  bool operator==(const EpisodeFooter&) const = default;
};

Bytes encode_header_frame(const EpisodeHeader& h);
Bytes encode_record_frame(const EpisodeRecord& r);
Bytes encode_footer_frame(const EpisodeFooter& f);

/// In-memory episode.
class Episode {
 public:
  Episode() = default;
  explicit Episode(EpisodeHeader header) : header_(std::move(header)) {}

  /// Appends a record. Ticks start at 0 and must be contiguous, else
  /// SequencingError.
  void record_step(std::uint64_t tick, const ObservationFrame& obs, const ActionCommand& cmd,
                   std::uint64_t world_hash);
  void finish(std::uint64_t final_hash, bool success);

  const EpisodeHeader& header() const noexcept { return header_; }
  const std::vector<EpisodeRecord>& records() const noexcept { return records_; }
  std::vector<EpisodeRecord>& mutable_records() noexcept { return records_; }
  const std::optional<EpisodeFooter>& footer() const noexcept { return footer_; }
  std::size_t size() const noexcept { return records_.size(); }

  Bytes serialize() const;
  /// Throws IntegrityError on corrupt, truncated or out-of-order data and
  /// SequencingError on non-contiguous ticks.
  static Episode deserialize(std::span<const std::uint8_t> bytes);

  void save(const std::string& path) const;
  static Episode load(const std::string& path);

 private:
  EpisodeHeader header_;
  std::vector<EpisodeRecord> records_;
  std::optional<EpisodeFooter> footer_;
};

/// Streams an episode to disk as it is recorded.
class EpisodeWriter {
 public:
  EpisodeWriter(const std::string& path, const EpisodeHeader& header);

  void record_step(std::uint64_t tick, const ObservationFrame& obs, const ActionCommand& cmd,
                   std::uint64_t world_hash);
  void finish(std::uint64_t final_hash, bool success);

  std::uint64_t ticks() const noexcept { return next_tick_; }
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
  std::uint64_t next_tick_ = 0;
  bool finished_ = false;
};

struct ReplayResult {
  std::uint64_t final_hash = 0;
  std::uint64_t recorded_hash = 0;
  bool matches = false;
  std::optional<std::uint64_t> first_divergent_tick;
  std::uint64_t ticks = 0;
  bool success = false;
};

/// Re-executes the recorded commands through the robot interface and the
/// simulator, starting from the task's seeded initial world, and compares the
/// per-tick and final world hashes.
ReplayResult replay(const Episode& episode);

/// One line per episode: path, task, success, ticks, final hash (hex).
void append_manifest(const std::string& manifest_path, const std::string& episode_path, const EpisodeHeader& header,
                     const EpisodeFooter& footer);

/// Writes actions.f32 (N x 17 LE floats), torso.f32 (NaN when absent),
/// proprio.csv, one raw image stream per camera (rgb_<id>.u8, depth_<id>.u16) and meta.json.
void export_episode(const Episode& episode, const std::string& out_dir);

}  // namespace mmteleop
