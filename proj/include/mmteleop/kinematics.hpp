#pragma once

#include <Eigen/Core>

#include "mmteleop/embodiment.hpp"
#include "mmteleop/pose.hpp"

namespace mmteleop {

using Matrix6Xd = Eigen::Matrix<double, 6, Eigen::Dynamic>;
using Vector6d = Eigen::Matrix<double, 6, 1>;

/// End-effector pose in the chain's parent (torso) frame:
/// mount * prod(origin_i * motion_i(q_i)) * tool.
/// Throws DimensionError on a size mismatch and DomainError when q is
/// outside the joint limits by more than 1e-9.
Pose forward_kinematics(const Chain& chain, const Eigen::VectorXd& q);

/// Geometric Jacobian in the same frame as forward_kinematics. Rows are
/// (linear; angular); revolute columns are (z x (p_ee - p_j); z), prismatic
/// columns (z; 0).
Matrix6Xd jacobian(const Chain& chain, const Eigen::VectorXd& q);

/// Stacked 6-vector (translation; rotation vector).
Vector6d to_twist(const DeltaPose& d);

/// Pose error taking `current` to `target`, as (dp; log(R_t R_c^T)).
Vector6d pose_error(const Pose& target, const Pose& current);

struct IkOptions {
  double damping = 0.05;  // lambda
  double tick_s = 0.05;   // per-joint step cap is max_velocity * tick_s; <= 0 disables the cap
};

/// One damped least-squares step dq = J^T (J J^T + lambda^2 I)^-1 dx. If any
/// joint would exceed max_velocity * tick, the whole step is scaled down
/// uniformly so its direction is preserved. Throws DomainError if lambda <= 0.
Eigen::VectorXd diff_ik_step(const Chain& chain, const Eigen::VectorXd& q, const DeltaPose& target,
                             const IkOptions& options = {});

/// Same step for a precomputed Jacobian, without the velocity cap.
Eigen::VectorXd damped_least_squares(const Matrix6Xd& J, const Vector6d& dx, double damping);

/// Clamps q into the chain's joint limits.
Eigen::VectorXd clamp_to_limits(const Chain& chain, const Eigen::VectorXd& q);

}  // namespace mmteleop
