#pragma once

#include <optional>

#include "mmteleop/action.hpp"

namespace mmteleop {

/// How missing or stale command fields are filled at the control rate.
///   velocities : held while age <= velocity_ttl, zero afterwards
///   deltas     : consumed once, zero when absent
///   grippers   : hold last, default 0 (open)
///   torso      : hold last target, default the current torso height
struct ConsolidationPolicy {
  double velocity_ttl_s = 0.25;

  TimestampUs ttl_us() const;
  /// Throws ConfigError unless ttl > 0.
  void validate() const;
};

inline constexpr const char* kConsolidatorSource = "consolidator";

/// Latest value per field, as seen by the robot side.
struct CommandHistory {
  struct TimedBase {
    Sourced<BaseVelocity> value;
    TimestampUs received_us = 0;
  };

  std::optional<TimedBase> base;
  std::optional<Sourced<DeltaPose>> left_arm;   // pending, not yet consumed
  std::optional<Sourced<DeltaPose>> right_arm;
  std::optional<Sourced<double>> left_gripper;
  std::optional<Sourced<double>> right_gripper;
  std::optional<Sourced<double>> torso;

  /// Folds a command into the history. Deltas arriving before the previous
  /// ones were consumed are composed, so no commanded motion is lost.
  void ingest(const ActionCommand& cmd, TimestampUs received_us);
  void consume_deltas();
  void clear() { *this = CommandHistory{}; }
};

/// Complete command for the tick at `now`; every field is present.
/// `current_torso` is the normalized torso height used when no torso target
/// was ever commanded.
ActionCommand consolidate(const CommandHistory& history, TimestampUs now, const ConsolidationPolicy& policy,
                          double current_torso);

/// History plus consume-once bookkeeping for the control loop.
class Consolidator {
 public:
  explicit Consolidator(ConsolidationPolicy policy = {});

  void ingest(const ActionCommand& cmd, TimestampUs received_us) { history_.ingest(cmd, received_us); }
  ActionCommand tick(TimestampUs now, double current_torso);
  /// Drops all history; the next tick is a full stop.
  void safety_stop() { history_.clear(); }

  const CommandHistory& history() const noexcept { return history_; }
  const ConsolidationPolicy& policy() const noexcept { return policy_; }

 private:
  ConsolidationPolicy policy_;
  CommandHistory history_;
};

}  // namespace mmteleop
