#include "mmteleop/kinematics.hpp"

#include <Eigen/Cholesky>
#include <algorithm>

#include "mmteleop/errors.hpp"

namespace mmteleop {

namespace {

constexpr double kLimitTolerance = 1e-9;

void check_configuration(const Chain& chain, const Eigen::VectorXd& q) {
  if (static_cast<std::size_t>(q.size()) != chain.dof()) {
    throw DimensionError("chain '" + chain.name + "' expects " + std::to_string(chain.dof()) + " joint values, got " +
                         std::to_string(q.size()));
  }
  for (std::size_t i = 0; i < chain.dof(); ++i) {
    const Joint& j = chain.joints[i];
    if (!(q[i] >= j.lower - kLimitTolerance && q[i] <= j.upper + kLimitTolerance)) {
      throw DomainError("joint '" + j.name + "' value " + std::to_string(q[i]) + " outside limits");
    }
  }
}

Eigen::Isometry3d joint_motion(const Joint& j, double q) {
  Eigen::Isometry3d m = Eigen::Isometry3d::Identity();
  if (j.type == JointType::revolute) {
    m.linear() = Eigen::AngleAxisd(q, j.axis).toRotationMatrix();
  } else {
    m.translation() = q * j.axis;
  }
  return m;
}

}  // namespace

Pose forward_kinematics(const Chain& chain, const Eigen::VectorXd& q) {
  check_configuration(chain, q);
  Eigen::Isometry3d t = chain.mount.isometry();
  for (std::size_t i = 0; i < chain.dof(); ++i) {
    t = t * chain.joints[i].origin.isometry() * joint_motion(chain.joints[i], q[i]);
  }
  t = t * chain.tool.isometry();
  return Pose::from_isometry(t);
}

Matrix6Xd jacobian(const Chain& chain, const Eigen::VectorXd& q) {
  check_configuration(chain, q);
  const auto n = static_cast<Eigen::Index>(chain.dof());
  std::vector<Eigen::Vector3d> axes(chain.dof()), origins(chain.dof());
  Eigen::Isometry3d t = chain.mount.isometry();
  for (std::size_t i = 0; i < chain.dof(); ++i) {
    const Joint& j = chain.joints[i];
    t = t * j.origin.isometry();
    axes[i] = t.linear() * j.axis;
    origins[i] = t.translation();
    t = t * joint_motion(j, q[i]);
  }
  const Eigen::Vector3d p_ee = (t * chain.tool.isometry()).translation();

  Matrix6Xd J(6, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d& z = axes[static_cast<std::size_t>(i)];
    if (chain.joints[static_cast<std::size_t>(i)].type == JointType::revolute) {
      J.col(i).head<3>() = z.cross(p_ee - origins[static_cast<std::size_t>(i)]);
      J.col(i).tail<3>() = z;
    } else {
      J.col(i).head<3>() = z;
      J.col(i).tail<3>().setZero();
    }
  }
  return J;
}

Vector6d to_twist(const DeltaPose& d) {
  Vector6d v;
  v << d.translation(), d.rotation();
  return v;
}

Vector6d pose_error(const Pose& target, const Pose& current) {
  Vector6d e;
  e << target.position() - current.position(),
      quaternion_log(target.orientation() * current.orientation().conjugate());
  return e;
}

Eigen::VectorXd damped_least_squares(const Matrix6Xd& J, const Vector6d& dx, double damping) {
  if (!(damping > 0.0)) throw DomainError("damping must be positive");
  Eigen::Matrix<double, 6, 6> A = J * J.transpose();
  A.diagonal().array() += damping * damping;
  return J.transpose() * A.ldlt().solve(dx);
}

Eigen::VectorXd diff_ik_step(const Chain& chain, const Eigen::VectorXd& q, const DeltaPose& target,
                             const IkOptions& options) {
  if (!(options.damping > 0.0)) throw DomainError("damping must be positive");
  Eigen::VectorXd dq = damped_least_squares(jacobian(chain, q), to_twist(target), options.damping);
  if (options.tick_s > 0.0) {
    const Eigen::VectorXd cap = chain.max_velocities() * options.tick_s;
    const double ratio = (dq.array().abs() / cap.array()).maxCoeff();
    if (ratio > 1.0) dq /= ratio;
  }
  return dq;
}

Eigen::VectorXd clamp_to_limits(const Chain& chain, const Eigen::VectorXd& q) {
  return q.cwiseMax(chain.lower_limits()).cwiseMin(chain.upper_limits());
}

}  // namespace mmteleop
