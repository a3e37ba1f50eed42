#include "mmteleop/consolidation.hpp"

#include <cmath>

#include "mmteleop/errors.hpp"

namespace mmteleop {

TimestampUs ConsolidationPolicy::ttl_us() const { return std::llround(velocity_ttl_s * 1e6); }

void ConsolidationPolicy::validate() const {
  if (!(velocity_ttl_s > 0.0)) throw ConfigError("velocity_ttl must be positive");
}

void CommandHistory::ingest(const ActionCommand& cmd, TimestampUs received_us) {
  if (cmd.base) base = TimedBase{*cmd.base, received_us};
  auto fold = [](std::optional<Sourced<DeltaPose>>& pending, const std::optional<Sourced<DeltaPose>>& in) {
    if (!in) return;
    if (pending) {
      pending = Sourced<DeltaPose>{chain_deltas(pending->value, in->value), in->source};
    } else {
      pending = in;
    }
  };
  fold(left_arm, cmd.left_arm);
  fold(right_arm, cmd.right_arm);
  if (cmd.left_gripper) left_gripper = cmd.left_gripper;
  if (cmd.right_gripper) right_gripper = cmd.right_gripper;
  if (cmd.torso) torso = cmd.torso;
}

void CommandHistory::consume_deltas() {
  left_arm.reset();
  right_arm.reset();
}

ActionCommand consolidate(const CommandHistory& h, TimestampUs now, const ConsolidationPolicy& policy,
                          double current_torso) {
  ActionCommand out;
  out.timestamp_us = now;
  const auto zero_delta = Sourced<DeltaPose>{DeltaPose::zero(), kConsolidatorSource};
  out.left_arm = h.left_arm.value_or(zero_delta);
  out.right_arm = h.right_arm.value_or(zero_delta);
  out.left_gripper = h.left_gripper.value_or(Sourced<double>{0.0, kConsolidatorSource});
  out.right_gripper = h.right_gripper.value_or(Sourced<double>{0.0, kConsolidatorSource});
  out.torso = h.torso.value_or(Sourced<double>{current_torso, kConsolidatorSource});
  if (h.base && now - h.base->received_us <= policy.ttl_us()) {
    out.base = h.base->value;
  } else {
    out.base = Sourced<BaseVelocity>{BaseVelocity{}, kConsolidatorSource};
  }
  return out;
}

Consolidator::Consolidator(ConsolidationPolicy policy) : policy_(policy) { policy_.validate(); }

ActionCommand Consolidator::tick(TimestampUs now, double current_torso) {
  ActionCommand out = consolidate(history_, now, policy_, current_torso);
  history_.consume_deltas();
  return out;
}

}  // namespace mmteleop
