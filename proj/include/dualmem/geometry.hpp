// Rigid-pose and similarity-transform value types shared by the engine,
// the loss stack, and the metric suite.
#pragma once

#include "dualmem/common.hpp"

#include <Eigen/Geometry>

#include <vector>

namespace dualmem {

struct TrajectoryPose {
  double timestamp = 0.0;
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  // Pose composition treats (rotation, translation) as a point transform:
  // x -> R x + t.
  TrajectoryPose compose(const TrajectoryPose& other) const {
    TrajectoryPose out;
    out.timestamp = timestamp;
    out.rotation = rotation * other.rotation;
    out.translation = rotation * other.translation + translation;
    return out;
  }

  TrajectoryPose inverse() const {
    TrajectoryPose out;
    out.timestamp = timestamp;
    out.rotation = rotation.conjugate();
    out.translation = -(out.rotation * translation);
    return out;
  }

  // Rotation angle in radians via the trace formula, acos argument clamped.
  double rotation_angle() const {
    const Eigen::Matrix3d r = rotation.toRotationMatrix();
    const double arg = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(arg);
  }
};

using Trajectory = std::vector<TrajectoryPose>;

struct Sim3Transform {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return scale * (rotation * p) + translation;
  }
};

}  // namespace dualmem
