#include "dualmem/metrics.hpp"

#include <algorithm>
#include <queue>

namespace dualmem {

KdTree3::KdTree3(PointCloud points) : points_(std::move(points)) {
  require(points_.rows() >= 1, "KdTree3: empty cloud");
  std::vector<Eigen::Index> idx(static_cast<size_t>(points_.rows()));
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<Eigen::Index>(i);
  nodes_.reserve(idx.size());
  root_ = build(idx, 0, static_cast<int>(idx.size()), 0);
}

int KdTree3::build(std::vector<Eigen::Index>& idx, int lo, int hi, int depth) {
  if (lo >= hi) return -1;
  const int axis = depth % 3;
  const int mid = lo + (hi - lo) / 2;
  std::nth_element(idx.begin() + lo, idx.begin() + mid, idx.begin() + hi,
                   [&](Eigen::Index a, Eigen::Index b) { return points_(a, axis) < points_(b, axis); });
  Node node;
  node.point = idx[static_cast<size_t>(mid)];
  node.axis = axis;
  const int self = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  nodes_[static_cast<size_t>(self)].left = build(idx, lo, mid, depth + 1);
  nodes_[static_cast<size_t>(self)].right = build(idx, mid + 1, hi, depth + 1);
  return self;
}

std::pair<Eigen::Index, double> KdTree3::nearest(const Eigen::Vector3d& query) const {
  Eigen::Index best = -1;
  double best_d2 = std::numeric_limits<double>::infinity();

  // explicit stack; nodes visited near-to-far with plane pruning
  std::vector<int> stack;
  stack.push_back(root_);
  while (!stack.empty()) {
    const int ni = stack.back();
    stack.pop_back();
    if (ni < 0) continue;
    const Node& n = nodes_[static_cast<size_t>(ni)];
    const double d2 = (points_.row(n.point).transpose() - query).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = n.point;
    }
    const double diff = query(n.axis) - points_(n.point, n.axis);
    const int near = diff <= 0.0 ? n.left : n.right;
    const int far = diff <= 0.0 ? n.right : n.left;
    if (diff * diff < best_d2) stack.push_back(far);
    stack.push_back(near);
  }
  return {best, best_d2};
}

std::vector<Eigen::Index> KdTree3::knearest(const Eigen::Vector3d& query, int k,
                                            Eigen::Index exclude) const {
  require(k >= 1, "KdTree3::knearest: k must be >= 1");
  using Entry = std::pair<double, Eigen::Index>;  // (squared distance, row)
  std::priority_queue<Entry> heap;                // max-heap on distance

  std::vector<int> stack;
  stack.push_back(root_);
  while (!stack.empty()) {
    const int ni = stack.back();
    stack.pop_back();
    if (ni < 0) continue;
    const Node& n = nodes_[static_cast<size_t>(ni)];
    if (n.point != exclude) {
      const double d2 = (points_.row(n.point).transpose() - query).squaredNorm();
      if (static_cast<int>(heap.size()) < k) {
        heap.emplace(d2, n.point);
      } else if (d2 < heap.top().first) {
        heap.pop();
        heap.emplace(d2, n.point);
      }
    }
    const double diff = query(n.axis) - points_(n.point, n.axis);
    const int near = diff <= 0.0 ? n.left : n.right;
    const int far = diff <= 0.0 ? n.right : n.left;
    if (static_cast<int>(heap.size()) < k || diff * diff < heap.top().first)
      stack.push_back(far);
    stack.push_back(near);
  }

  std::vector<Eigen::Index> out(heap.size());
  for (auto it = out.rbegin(); it != out.rend(); ++it) {
    *it = heap.top().second;
    heap.pop();
  }
  return out;
}

void DepthFrame::validate() const {
  require(estimate.rows() == truth.rows() && estimate.cols() == truth.cols() &&
              estimate.rows() == valid.rows() && estimate.cols() == valid.cols(),
          "DepthFrame: shape mismatch");
  for (Eigen::Index i = 0; i < estimate.rows(); ++i)
    for (Eigen::Index j = 0; j < estimate.cols(); ++j)
      if (valid(i, j))
        require(estimate(i, j) > 0.0 && std::isfinite(estimate(i, j)) && truth(i, j) > 0.0 &&
                    std::isfinite(truth(i, j)),
                "DepthFrame: valid pixel with non-positive or non-finite depth");
}

void validate_trajectory(const Trajectory& traj) {
  for (size_t i = 0; i < traj.size(); ++i) {
    require(std::abs(traj[i].rotation.norm() - 1.0) <= 1e-9,
            "Trajectory: quaternion not unit norm");
    if (i > 0)
      require(traj[i].timestamp > traj[i - 1].timestamp,
              "Trajectory: timestamps not strictly increasing");
  }
}

Sim3Transform umeyama_sim3(const PointCloud& src, const PointCloud& dst) {
  const Eigen::Index n = src.rows();
  require(n == dst.rows(), "umeyama_sim3: correspondence count mismatch");
  require(n >= 3, "umeyama_sim3: needs at least 3 correspondences");

  const Eigen::RowVector3d mu_src = src.colwise().mean();
  const Eigen::RowVector3d mu_dst = dst.colwise().mean();
  const PointCloud cs = src.rowwise() - mu_src;
  const PointCloud cd = dst.rowwise() - mu_dst;

  const Eigen::Matrix3d sigma = cd.transpose() * cs / static_cast<double>(n);
  const double var_src = cs.squaredNorm() / static_cast<double>(n);
  require(var_src > 0.0, "umeyama_sim3: source points are all identical");

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(sigma, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d d = svd.singularValues();
  require(d(1) > 1e-12 * std::max(d(0), 1.0),
          "umeyama_sim3: rank-deficient covariance (collinear points)");

  Eigen::Vector3d s_diag = Eigen::Vector3d::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) s_diag(2) = -1.0;

  Sim3Transform t;
  t.rotation = svd.matrixU() * s_diag.asDiagonal() * svd.matrixV().transpose();
  t.scale = d.dot(s_diag) / var_src;
  require(t.scale > 0.0, "umeyama_sim3: non-positive recovered scale");
  t.translation = mu_dst.transpose() - t.scale * (t.rotation * mu_src.transpose());
  return t;
}

namespace {

PointCloud translations_of(const Trajectory& traj) {
  PointCloud pts(static_cast<Eigen::Index>(traj.size()), 3);
  for (size_t i = 0; i < traj.size(); ++i) pts.row(static_cast<Eigen::Index>(i)) = traj[i].translation.transpose();
  return pts;
}

}  // namespace

double ate(const Trajectory& est, const Trajectory& gt) {
  require(est.size() == gt.size(), "ate: trajectory length mismatch");
  require(est.size() >= 3, "ate: needs at least 3 poses");

  const PointCloud est_xyz = translations_of(est);
  const PointCloud gt_xyz = translations_of(gt);
  const Sim3Transform t = umeyama_sim3(est_xyz, gt_xyz);

  double sq_sum = 0.0;
  for (Eigen::Index i = 0; i < est_xyz.rows(); ++i) {
    const Eigen::Vector3d aligned = t.apply(est_xyz.row(i).transpose());
    sq_sum += (aligned - gt_xyz.row(i).transpose()).squaredNorm();
  }
  return std::sqrt(sq_sum / static_cast<double>(est_xyz.rows()));
}

RpeResult rpe(const Trajectory& est, const Trajectory& gt, int delta) {
  require(est.size() == gt.size(), "rpe: trajectory length mismatch");
  require(delta >= 1, "rpe: delta must be >= 1");
  require(est.size() > static_cast<size_t>(delta), "rpe: delta >= trajectory length");

  double trans_sq = 0.0, rot_sq = 0.0;
  const size_t pairs = est.size() - static_cast<size_t>(delta);
  for (size_t i = 0; i < pairs; ++i) {
    const TrajectoryPose rel_gt = gt[i].inverse().compose(gt[i + delta]);
    const TrajectoryPose rel_est = est[i].inverse().compose(est[i + delta]);
    const TrajectoryPose err = rel_gt.inverse().compose(rel_est);
    trans_sq += err.translation.squaredNorm();
    const double deg = err.rotation_angle() * 180.0 / M_PI;
    rot_sq += deg * deg;
  }
  RpeResult r;
  r.trans = std::sqrt(trans_sq / static_cast<double>(pairs));
  r.rot_deg = std::sqrt(rot_sq / static_cast<double>(pairs));
  return r;
}

DepthMetrics depth_metrics(const std::vector<DepthFrame>& frames, DepthMode mode,
                           double threshold) {
  require(threshold > 1.0, "depth_metrics: threshold must exceed 1");
  std::vector<double> est, gt;
  for (const auto& f : frames) {
    f.validate();
    for (Eigen::Index i = 0; i < f.estimate.rows(); ++i)
      for (Eigen::Index j = 0; j < f.estimate.cols(); ++j)
        if (f.valid(i, j)) {
          est.push_back(f.estimate(i, j));
          gt.push_back(f.truth(i, j));
        }
  }
  require(!est.empty(), "depth_metrics: no valid pixels");

  if (mode == DepthMode::PerSequenceScaled) {
    std::vector<double> ratio(est.size());
    for (size_t i = 0; i < est.size(); ++i) ratio[i] = gt[i] / est[i];
    const size_t mid = ratio.size() / 2;
    std::nth_element(ratio.begin(), ratio.begin() + mid, ratio.end());
    double med = ratio[mid];
    if (ratio.size() % 2 == 0) {
      const double lower = *std::max_element(ratio.begin(), ratio.begin() + mid);
      med = 0.5 * (med + lower);
    }
    for (auto& e : est) e *= med;
  }

  double abs_rel_sum = 0.0;
  long within = 0;
  for (size_t i = 0; i < est.size(); ++i) {
    abs_rel_sum += std::abs(est[i] - gt[i]) / gt[i];
    const double ratio = std::max(gt[i] / est[i], est[i] / gt[i]);
    if (ratio < threshold) ++within;
  }
  DepthMetrics m;
  m.abs_rel = abs_rel_sum / static_cast<double>(est.size());
  m.delta_125 = 100.0 * static_cast<double>(within) / static_cast<double>(est.size());
  return m;
}

ChamferResult chamfer(const PointCloud& pred, const PointCloud& truth) {
  require(pred.rows() >= 1 && truth.rows() >= 1, "chamfer: empty cloud");
  const KdTree3 pred_tree(pred);
  const KdTree3 truth_tree(truth);

  double acc = 0.0;
  for (Eigen::Index i = 0; i < pred.rows(); ++i)
    acc += std::sqrt(truth_tree.nearest(pred.row(i).transpose()).second);
  acc /= static_cast<double>(pred.rows());

  double comp = 0.0;
  for (Eigen::Index i = 0; i < truth.rows(); ++i)
    comp += std::sqrt(pred_tree.nearest(truth.row(i).transpose()).second);
  comp /= static_cast<double>(truth.rows());

  return {0.5 * (acc + comp), acc, comp};
}

std::vector<std::optional<Eigen::Vector3d>> estimate_normals(const PointCloud& cloud, int k) {
  require(k >= 3, "estimate_normals: k must be >= 3");
  require(cloud.rows() >= k + 1, "estimate_normals: cloud smaller than k + 1");
  const KdTree3 tree(cloud);

  std::vector<std::optional<Eigen::Vector3d>> normals(static_cast<size_t>(cloud.rows()));
  for (Eigen::Index i = 0; i < cloud.rows(); ++i) {
    const auto nbrs = tree.knearest(cloud.row(i).transpose(), k, i);
    Eigen::Matrix3Xd nbhd(3, nbrs.size() + 1);
    nbhd.col(0) = cloud.row(i).transpose();
    for (size_t j = 0; j < nbrs.size(); ++j) nbhd.col(static_cast<Eigen::Index>(j) + 1) = cloud.row(nbrs[j]).transpose();
    const Eigen::Vector3d centroid = nbhd.rowwise().mean();
    nbhd.colwise() -= centroid;
    const Eigen::Matrix3d cov = nbhd * nbhd.transpose() / static_cast<double>(nbhd.cols());

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const Eigen::Vector3d evals = eig.eigenvalues();  // ascending
    // rank < 2 neighborhood (coincident or collinear): no stable normal
    if (evals(2) <= 0.0 || evals(1) <= 1e-9 * evals(2)) continue;
    normals[static_cast<size_t>(i)] = eig.eigenvectors().col(0).normalized();
  }
  return normals;
}

double normal_consistency(const PointCloud& pred, const PointCloud& truth, int k) {
  const auto pred_normals = estimate_normals(pred, k);
  const auto truth_normals = estimate_normals(truth, k);
  const KdTree3 pred_tree(pred);
  const KdTree3 truth_tree(truth);

  auto directed = [](const PointCloud& from, const std::vector<std::optional<Eigen::Vector3d>>& fn,
                     const KdTree3& to_tree,
                     const std::vector<std::optional<Eigen::Vector3d>>& tn) {
    double sum = 0.0;
    long count = 0;
    for (Eigen::Index i = 0; i < from.rows(); ++i) {
      const auto& n_from = fn[static_cast<size_t>(i)];
      if (!n_from) continue;
      const Eigen::Index j = to_tree.nearest(from.row(i).transpose()).first;
      const auto& n_to = tn[static_cast<size_t>(j)];
      if (!n_to) continue;
      sum += std::abs(n_from->dot(*n_to));
      ++count;
    }
    require(count > 0, "normal_consistency: all neighborhoods degenerate");
    return sum / static_cast<double>(count);
  };

  return 0.5 * (directed(pred, pred_normals, truth_tree, truth_normals) +
                directed(truth, truth_normals, pred_tree, pred_normals));
}

}  // namespace dualmem
