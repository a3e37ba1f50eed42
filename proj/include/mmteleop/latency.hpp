#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mmteleop/action.hpp"

namespace mmteleop {

/// Per-direction network impairment: each message is delayed by
/// base_delay + U(-jitter, +jitter) (floored at 0) and dropped with
/// drop_probability. Delivery is FIFO: a message never overtakes an earlier
/// one, so a short sample may be stretched to the previous delivery time.
struct LatencyModel {
  double base_delay_ms = 0.0;
  double jitter_ms = 0.0;
  double drop_probability = 0.0;
  std::uint64_t seed = 0;

  bool is_identity() const noexcept { return base_delay_ms == 0.0 && jitter_ms == 0.0 && drop_probability == 0.0; }
  /// Throws ConfigError on negative delays or drop probability outside [0,1].
  void validate() const;
  /// Parses "base,jitter,drop,seed" (seed optional).
  static LatencyModel parse(const std::string& text);
};

/// Seeded sampler of delivery times. Uses mt19937_64 and a fixed 53-bit
/// mantissa mapping so sequences are identical across standard libraries.
class DelaySampler {
 public:
  explicit DelaySampler(const LatencyModel& model);

  /// Delivery time for a message sent at `send_us`, or nullopt if dropped.
  std::optional<TimestampUs> schedule(TimestampUs send_us);

  std::uint64_t dropped() const noexcept { return dropped_; }

 private:
  double uniform();

  LatencyModel model_;
  std::mt19937_64 rng_;
  TimestampUs last_delivery_ = INT64_MIN;
  std::uint64_t dropped_ = 0;
};

template <typename T>
struct Timed {
  TimestampUs time_us = 0;
  T value{};
};

/// Delayed FIFO for one direction of a channel.
template <typename T>
class LatencyQueue {
 public:
  explicit LatencyQueue(const LatencyModel& model) : sampler_(model) {}

  void push(T value, TimestampUs send_us) {
    if (auto at = sampler_.schedule(send_us)) {
      delays_us_.push_back(*at - send_us);
      queue_.push_back({*at, std::move(value)});
    }
  }

  /// Messages with delivery time <= now, in send order.
  std::vector<Timed<T>> pop_ready(TimestampUs now) {
    std::vector<Timed<T>> out;
    while (!queue_.empty() && queue_.front().time_us <= now) {
      out.push_back(std::move(queue_.front()));
      queue_.pop_front();
    }
    return out;
  }

  std::optional<TimestampUs> next_delivery() const {
    return queue_.empty() ? std::nullopt : std::optional<TimestampUs>(queue_.front().time_us);
  }
  std::size_t pending() const noexcept { return queue_.size(); }
  std::uint64_t dropped() const noexcept { return sampler_.dropped(); }
  /// Realized delay of every delivered-or-pending message, in send order.
  const std::vector<TimestampUs>& delays_us() const noexcept { return delays_us_; }

 private:
  DelaySampler sampler_;
  std::deque<Timed<T>> queue_;
  std::vector<TimestampUs> delays_us_;
};

/// Whole-stream form: input sorted by send time, output stamped with
/// delivery time.
template <typename T>
std::vector<Timed<T>> inject_latency(const std::vector<Timed<T>>& stream, const LatencyModel& model) {
  DelaySampler sampler(model);
  std::vector<Timed<T>> out;
  out.reserve(stream.size());
  for (const auto& m : stream) {
    if (auto at = sampler.schedule(m.time_us)) out.push_back({*at, m.value});
  }
  return out;
}

}  // namespace mmteleop
