// Evaluation suite: least-squares Sim(3) alignment, trajectory errors (ATE,
// RPE), depth accuracy, Chamfer distance, and normal consistency.
#pragma once

#include "dualmem/common.hpp"
#include "dualmem/geometry.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace dualmem {

using PointCloud = Eigen::Matrix<double, Eigen::Dynamic, 3>;

// Static 3D k-d tree over cloud rows.
class KdTree3 {
 public:
  explicit KdTree3(PointCloud points);

  // (row index of nearest point, squared distance)
  std::pair<Eigen::Index, double> nearest(const Eigen::Vector3d& query) const;

  // Indices of the k nearest points, closest first. `exclude` skips one row
  // (used for self-neighborhoods).
  std::vector<Eigen::Index> knearest(const Eigen::Vector3d& query, int k,
                                     Eigen::Index exclude = -1) const;

  const PointCloud& points() const { return points_; }

 private:
  struct Node {
    Eigen::Index point = -1;
    int axis = 0;
    int left = -1, right = -1;
  };

  PointCloud points_;
  std::vector<Node> nodes_;
  int root_ = -1;

  int build(std::vector<Eigen::Index>& idx, int lo, int hi, int depth);
};

struct DepthFrame {
  Eigen::ArrayXXd estimate;
  Eigen::ArrayXXd truth;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> valid;

  void validate() const;
};

enum class DepthMode { Metric, PerSequenceScaled };

struct DepthMetrics {
  double abs_rel = 0.0;
  double delta_125 = 0.0;  // percentage in [0, 100]
};

struct RpeResult {
  double trans = 0.0;    // meters, RMSE over frame pairs
  double rot_deg = 0.0;  // degrees, RMSE over frame pairs
};

struct ChamferResult {
  double cd = 0.0;
  double accuracy = 0.0;
  double completeness = 0.0;
};

// Least-squares similarity s, R, t minimizing sum ||dst - (s R src + t)||^2,
// with the determinant sign correction so R is always a proper rotation.
// Needs >= 3 correspondences spanning at least a plane.
Sim3Transform umeyama_sim3(const PointCloud& src, const PointCloud& dst);

// RMSE of translation residuals after Sim(3) alignment of the estimate onto
// the ground truth. Association is by index.
double ate(const Trajectory& est, const Trajectory& gt);

// Relative pose error at fixed frame offset delta: per pair,
// E_i = (gt_i^-1 gt_{i+d})^-1 (est_i^-1 est_{i+d}); RMSE of ||trans(E_i)||
// and of the rotation angle in degrees.
RpeResult rpe(const Trajectory& est, const Trajectory& gt, int delta = 1);

// Abs Rel and the delta < threshold percentage (max of the two depth ratios)
// over all valid pixels of the sequence. PerSequenceScaled first rescales the
// estimates by the median truth/estimate ratio.
DepthMetrics depth_metrics(const std::vector<DepthFrame>& frames, DepthMode mode,
                           double threshold = 1.25);

// accuracy: mean pred->truth nearest-neighbor distance; completeness: the
// converse; cd: their mean.
ChamferResult chamfer(const PointCloud& pred, const PointCloud& truth);

// PCA normal from the k nearest neighbors of each point (plus the point
// itself); nullopt where the neighborhood is degenerate (rank < 2).
std::vector<std::optional<Eigen::Vector3d>> estimate_normals(const PointCloud& cloud, int k);

// Symmetrized mean absolute normal dot product over nearest-neighbor pairs;
// in [0, 1]. Points with degenerate neighborhoods are excluded from both
// directions; errors if nothing is left.
double normal_consistency(const PointCloud& pred, const PointCloud& truth, int k = 8);

void validate_trajectory(const Trajectory& traj);

}  // namespace dualmem
