#pragma once

#include "mmteleop/embodiment.hpp"
#include "mmteleop/robot_interface.hpp"
#include "mmteleop/world.hpp"

namespace mmteleop {

inline constexpr double kGraspThreshold = 0.03;  // m, hand point to object surface
inline constexpr double kGripperClosedLevel = 0.5;

/// Closed-form planar base motion over dt for a constant body twist. Uses the
/// unicycle arc when |wz| > 1e-6, the straight-line integral otherwise.
BasePose2d integrate_base(const BasePose2d& base, const BaseVelocity& v, double dt);

/// Creates (engage) or drops (release) the sticky-grasp constraint of one
/// hand. Engaging picks the nearest graspable, unattached object whose
/// surface is within kGraspThreshold of the hand point; nothing in range is a
/// no-op.
WorldState set_grasp(const WorldState& state, const EmbodimentSpec& spec, Hand hand, bool engage);

/// Re-derives every constrained object pose as hand pose * relative.
void apply_grasp_constraints(WorldState& state, const EmbodimentSpec& spec);

/// Advances the world by dt in (0, 0.1] seconds, else DomainError.
///   base    : closed-form arc, vy ignored on differential bases
///   joints  : move toward targets at <= max_velocity
///   grippers: follow the target; crossing 0.5 upward engages a grasp,
///             crossing downward releases it
///   objects : only move through grasp constraints
WorldState step(const WorldState& state, const RobotCommand& cmd, double dt, const EmbodimentSpec& spec);

}  // namespace mmteleop
