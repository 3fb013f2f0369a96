#include "dualmem/objectives.hpp"

namespace dualmem {

double scale_norm(const PointMap& pm) {
  pm.validate();
  double sum = 0.0;
  long count = 0;
  for (Eigen::Index i = 0; i < pm.size(); ++i) {
    if (!pm.valid[static_cast<size_t>(i)]) continue;
    sum += pm.points.row(i).norm();
    ++count;
  }
  require(count > 0, "scale_norm: no valid points");
  const double s = sum / static_cast<double>(count);
  require(s > 0.0, "scale_norm: undefined scale, all valid points at the origin");
  return s;
}

double conf_regression_loss(const PointMap& pred, const PointMap& target, double beta) {
  pred.validate();
  target.validate();
  require(pred.size() == target.size(), "conf_regression_loss: length mismatch");
  require(beta >= 0.0, "conf_regression_loss: beta must be non-negative");

  std::vector<Eigen::Index> both;
  both.reserve(static_cast<size_t>(pred.size()));
  for (Eigen::Index i = 0; i < pred.size(); ++i)
    if (pred.valid[static_cast<size_t>(i)] && target.valid[static_cast<size_t>(i)])
      both.push_back(i);
  require(!both.empty(), "conf_regression_loss: empty mask intersection");

  auto mean_norm = [&](const PointMap& pm) {
    double sum = 0.0;
    for (const Eigen::Index i : both) sum += pm.points.row(i).norm();
    return sum / static_cast<double>(both.size());
  };
  const double s_pred = mean_norm(pred);
  const double s_target = mean_norm(target);
  require(s_pred > 0.0 && s_target > 0.0, "conf_regression_loss: undefined scale");

  double loss = 0.0;
  for (const Eigen::Index i : both) {
    const double c = pred.confidence(i);
    require(c > 0.0, "conf_regression_loss: non-positive confidence");
    const double residual = (pred.points.row(i) / s_pred - target.points.row(i) / s_target).norm();
    loss += c * residual - beta * std::log(c);
  }
  return loss;
}

double loss_3d(const PointMap& pred_self, const PointMap& tgt_self, const PointMap& pred_world,
               const PointMap& tgt_world, double beta) {
  return conf_regression_loss(pred_self, tgt_self, beta) +
         conf_regression_loss(pred_world, tgt_world, beta);
}

double pose_loss(const std::vector<PoseTarget>& preds, const std::vector<PoseTarget>& targets,
                 bool canonicalize_hemisphere) {
  require(!preds.empty(), "pose_loss: empty sequence");
  require(preds.size() == targets.size(), "pose_loss: length mismatch");

  double loss = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) {
    const PoseTarget& p = preds[i];
    const PoseTarget& t = targets[i];
    require(p.scale > 0.0 && t.scale > 0.0, "pose_loss: scales must be positive");
    Eigen::Vector4d q = p.quaternion;
    if (canonicalize_hemisphere && q.dot(t.quaternion) < 0.0) q = -q;
    loss += (q - t.quaternion).norm() + (p.translation / p.scale - t.translation / t.scale).norm();
  }
  return loss;
}

double rgb_loss(const Matrix& pred_image, const Matrix& target_image) {
  require(pred_image.rows() == target_image.rows() && pred_image.cols() == target_image.cols(),
          "rgb_loss: shape mismatch");
  return (pred_image - target_image).squaredNorm();
}

double total_loss(double l3d, double lpose, double lrgb, bool is_raymap) {
  require(std::isfinite(l3d) && std::isfinite(lpose) && std::isfinite(lrgb),
          "total_loss: components must be finite");
  return l3d + lpose + (is_raymap ? lrgb : 0.0);
}

}  // namespace dualmem
