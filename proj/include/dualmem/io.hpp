// File formats: TUM trajectories, ASCII PLY and CSV point clouds, CSV
// matrices for depth maps.
#pragma once

#include "dualmem/geometry.hpp"
#include "dualmem/metrics.hpp"

#include <optional>
#include <string>

namespace dualmem {

struct CloudData {
  PointCloud points;
  std::optional<PointCloud> normals;  // same row count when present
};

// One pose per line: "timestamp tx ty tz qx qy qz qw"; '#' lines ignored.
Trajectory read_tum(const std::string& path);
void write_tum(const std::string& path, const Trajectory& traj);

// ASCII PLY with x y z and optional nx ny nz vertex properties.
CloudData read_ply(const std::string& path);
void write_ply(const std::string& path, const CloudData& cloud);

// CSV with header "x,y,z".
PointCloud read_cloud_csv(const std::string& path);
void write_cloud_csv(const std::string& path, const PointCloud& cloud);

// Dispatch on extension: .ply or .csv.
CloudData read_cloud(const std::string& path);

// Rectangular CSV of numbers; one row per line.
Eigen::ArrayXXd read_matrix_csv(const std::string& path);

// Depth pair: pixels valid where both maps are positive and finite.
DepthFrame depth_frame_from_csv(const std::string& estimate_path, const std::string& truth_path);

}  // namespace dualmem
