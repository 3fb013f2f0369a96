#include "dualmem/heads.hpp"

namespace dualmem {

namespace {
constexpr double kConfidenceFloor = 1e-6;
}

PoseHead PoseHead::zero(int d_pose) {
  require(d_pose > 0, "PoseHead: d_pose must be positive");
  return {Matrix::Zero(7, d_pose), Vector::Zero(7)};
}

PoseHead PoseHead::random(int d_pose, uint64_t seed) {
  require(d_pose > 0, "PoseHead: d_pose must be positive");
  Rng rng(seed);
  return {gaussian_matrix(rng, 7, d_pose, 1.0 / std::sqrt(d_pose)), Vector::Zero(7)};
}

TrajectoryPose head_pose(const PoseHead& head, const Vector& posterior_pose) {
  require(head.w.cols() == posterior_pose.size(), "head_pose: input width mismatch");
  require(posterior_pose.allFinite(), "head_pose: non-finite input");
  const Vector raw = head.w * posterior_pose + head.b;

  TrajectoryPose pose;
  Eigen::Vector4d q = raw.head<4>();
  const double n = q.norm();
  if (n < 1e-12) {
    pose.rotation = Eigen::Quaterniond::Identity();
  } else {
    q /= n;
    pose.rotation = Eigen::Quaterniond(q(0), q(1), q(2), q(3));
  }
  pose.translation = raw.tail<3>();
  return pose;
}

PointHead PointHead::zero(PointHeadMode mode, int d_frame, int d_pose) {
  require(d_frame > 0 && d_pose > 0, "PointHead: dims must be positive");
  const int width = mode == PointHeadMode::World ? d_frame + d_pose : d_frame;
  return {mode, Matrix::Zero(4, width), Vector::Zero(4)};
}

PointHead PointHead::random(PointHeadMode mode, int d_frame, int d_pose, uint64_t seed) {
  require(d_frame > 0 && d_pose > 0, "PointHead: dims must be positive");
  Rng rng(seed);
  const int width = mode == PointHeadMode::World ? d_frame + d_pose : d_frame;
  return {mode, gaussian_matrix(rng, 4, width, 1.0 / std::sqrt(width)), Vector::Zero(4)};
}

PointMap head_points(const PointHead& head, const Matrix& refined_tokens,
                     const Vector& posterior_pose) {
  const Eigen::Index n = refined_tokens.rows();
  require(n >= 1, "head_points: no tokens");
  require(refined_tokens.allFinite() && posterior_pose.allFinite(),
          "head_points: non-finite input");

  PointMap pm;
  pm.points.resize(n, 3);
  pm.confidence.resize(n);
  pm.valid.assign(static_cast<size_t>(n), true);

  Vector input(head.w.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (head.mode == PointHeadMode::World) {
      require(head.w.cols() == refined_tokens.cols() + posterior_pose.size(),
              "head_points: world head width mismatch");
      input.head(refined_tokens.cols()) = refined_tokens.row(i).transpose();
      input.tail(posterior_pose.size()) = posterior_pose;
    } else {
      require(head.w.cols() == refined_tokens.cols(), "head_points: self head width mismatch");
      input = refined_tokens.row(i).transpose();
    }
    const Vector raw = head.w * input + head.b;
    pm.points.row(i) = raw.head<3>().transpose();
    pm.confidence(i) = softplus(raw(3)) + kConfidenceFloor;
  }
  return pm;
}

}  // namespace dualmem
