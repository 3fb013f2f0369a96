// Toy linear prediction heads: pose (unit quaternion + translation) from the
// posterior pose token, and pointmaps with positive confidences from refined
// frame tokens.
#pragma once

#include "dualmem/common.hpp"
#include "dualmem/geometry.hpp"
#include "dualmem/pointmap.hpp"

#include <cstdint>

namespace dualmem {

struct PoseHead {
  Matrix w;  // 7 x d_pose
  Vector b;  // 7

  static PoseHead zero(int d_pose);
  static PoseHead random(int d_pose, uint64_t seed);
};

// Raw head output order: (qw, qx, qy, qz, tx, ty, tz). The quaternion block is
// normalized; a norm below 1e-12 falls back to the identity quaternion.
TrajectoryPose head_pose(const PoseHead& head, const Vector& posterior_pose);

enum class PointHeadMode { Self, World };

struct PointHead {
  PointHeadMode mode = PointHeadMode::Self;
  Matrix w;  // 4 x d_frame (Self) or 4 x (d_frame + d_pose) (World)
  Vector b;  // 4

  static PointHead zero(PointHeadMode mode, int d_frame, int d_pose);
  static PointHead random(PointHeadMode mode, int d_frame, int d_pose, uint64_t seed);
};

// One 3D point and confidence per token; confidence = softplus(raw) + 1e-6 so
// the log term of the confidence loss stays defined. World mode conditions on
// the posterior pose by concatenation.
PointMap head_points(const PointHead& head, const Matrix& refined_tokens,
                     const Vector& posterior_pose);

}  // namespace dualmem
