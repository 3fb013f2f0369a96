// Loss stack: confidence-aware 3D regression with scale-normalized residuals,
// pose loss over quaternion + scaled translation, RGB reconstruction loss,
// and the raymap-gated total.
#pragma once

#include "dualmem/common.hpp"
#include "dualmem/pointmap.hpp"

#include <vector>

namespace dualmem {

struct PoseTarget {
  Eigen::Vector4d quaternion = {1, 0, 0, 0};  // (w, x, y, z), unit norm
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double scale = 1.0;

  void validate() const {
    require(std::abs(quaternion.norm() - 1.0) <= 1e-9, "PoseTarget: quaternion not unit norm");
    require(scale > 0.0, "PoseTarget: scale must be positive");
  }
};

// Mean Euclidean norm over valid points. Errors when no valid point exists or
// every valid point sits at the origin.
double scale_norm(const PointMap& pm);

// sum over the intersected valid mask of c * ||p/s_pred - t/s_target||_2
// - beta * log c, with both scale norms taken over the intersection.
double conf_regression_loss(const PointMap& pred, const PointMap& target, double beta);

double loss_3d(const PointMap& pred_self, const PointMap& tgt_self, const PointMap& pred_world,
               const PointMap& tgt_world, double beta);

// sum over frames of ||q_pred - q_tgt|| + ||t_pred/s_pred - t_tgt/s_tgt||.
// canonicalize_hemisphere flips the predicted quaternion onto the target's
// hemisphere before the distance; the literal formula is the default.
double pose_loss(const std::vector<PoseTarget>& preds, const std::vector<PoseTarget>& targets,
                 bool canonicalize_hemisphere = false);

// sum of squared pixel differences
double rgb_loss(const Matrix& pred_image, const Matrix& target_image);

double total_loss(double l3d, double lpose, double lrgb, bool is_raymap);

}  // namespace dualmem
