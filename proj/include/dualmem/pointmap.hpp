// Per-token 3D points with validity mask and strictly positive confidences.
#pragma once

#include "dualmem/common.hpp"

#include <vector>

namespace dualmem {

struct PointMap {
  Matrix points;              // n x 3
  Vector confidence;          // n, entries > 0 on valid points
  std::vector<bool> valid;    // length n

  Eigen::Index size() const { return points.rows(); }

  void validate() const {
    require(points.cols() == 3, "PointMap: points must be n x 3");
    require(confidence.size() == points.rows(), "PointMap: confidence length mismatch");
    require(static_cast<Eigen::Index>(valid.size()) == points.rows(),
            "PointMap: mask length mismatch");
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      if (!valid[static_cast<size_t>(i)]) continue;
      require(points.row(i).allFinite(), "PointMap: non-finite valid point");
      require(confidence(i) > 0.0, "PointMap: non-positive confidence on valid point");
    }
  }

  static PointMap from_points(Matrix pts) {
    PointMap pm;
    pm.confidence = Vector::Ones(pts.rows());
    pm.valid.assign(static_cast<size_t>(pts.rows()), true);
    pm.points = std::move(pts);
    return pm;
  }
};

}  // namespace dualmem
