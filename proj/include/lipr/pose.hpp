// lipr: rigid body pose (unit quaternion + translation).
#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <stdexcept>

namespace lipr {

/// Rigid transform. Applied as p' = q * p + t.
struct Pose {
  Eigen::Quaterniond q{1.0, 0.0, 0.0, 0.0};
  Eigen::Vector3d t{0.0, 0.0, 0.0};

  static Pose identity() { return Pose{}; }

  static Pose identity_at(const Eigen::Vector3d& position) {
    Pose p;
    p.t = position;
    return p;
  }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return q * p + t; }

  Pose inverse() const {
    Pose out;
    out.q = q.conjugate();
    out.t = -(out.q * t);
    return out;
  }

  /// this ∘ other: (this * other).apply(p) == this.apply(other.apply(p))
  Pose compose(const Pose& other) const {
    Pose out;
    out.q = q * other.q;
    out.q.normalize();
    out.t = q * other.t + t;
    return out;
  }

  /// Rotation angle in [0, pi].
  double rotation_angle() const {
    const double w = std::min(1.0, std::abs(q.normalized().w()));
    return 2.0 * std::acos(w);
  }

  void check_unit(double tol = 1e-6) const {
    if (std::abs(q.norm() - 1.0) > tol)
      throw std::invalid_argument("Pose: quaternion norm deviates from 1");
  }
};

inline Pose pose_from_axis_angle(const Eigen::Vector3d& axis, double angle,
                                 const Eigen::Vector3d& t = Eigen::Vector3d::Zero()) {
  Pose p;
  p.q = Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis.normalized()));
  p.t = t;
  return p;
}

}  // namespace lipr
