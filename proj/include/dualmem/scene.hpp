// Synthetic scenes and the encoder stand-in: landmark clouds with seeded
// camera trajectories, and a deterministic featurizer that projects visible
// landmarks into a binned token grid embedded by a random linear code.
#pragma once

#include "dualmem/frame.hpp"
#include "dualmem/geometry.hpp"
#include "dualmem/metrics.hpp"

#include <cstdint>
#include <string>

namespace dualmem {

enum class TrajectoryKind { Orbit, Corridor, RandomWalk };

TrajectoryKind trajectory_kind_from_string(const std::string& name);
std::string to_string(TrajectoryKind kind);

struct SyntheticScene {
  PointCloud landmarks;       // n x 3
  PointCloud landmark_normals;  // n x 3, unit rows
  Trajectory trajectory;      // camera-to-world poses, one per frame
  uint64_t seed = 0;
  int frame_count = 0;
};

SyntheticScene generate_scene(uint64_t seed, int n_landmarks, TrajectoryKind kind,
                              int frame_count);

struct FeaturizerConfig {
  int d_in = 64;
  int grid = 4;          // tokens come from a grid x grid image binning
  double fov_deg = 90.0; // full horizontal/vertical field of view
  double near_plane = 0.05;
  uint64_t seed = 0;

  void validate() const {
    require(d_in >= 2, "FeaturizerConfig: d_in must be >= 2");
    require(grid >= 1, "FeaturizerConfig: grid must be >= 1");
    require(fov_deg > 0.0 && fov_deg < 180.0, "FeaturizerConfig: fov out of range");
    require(near_plane > 0.0, "FeaturizerConfig: near plane must be positive");
  }
};

// Projects landmarks into the frame's camera, bins them, and embeds per-bin
// summaries (log-occupancy, mean depth, mean bearing) through a seeded random
// linear code into the first d_in - 1 channels. A frame that sees nothing
// yields the designated empty token: zeros with the last channel set to 1.
class Featurizer {
 public:
  explicit Featurizer(const FeaturizerConfig& cfg);

  FramePacket packet(const SyntheticScene& scene, int frame_index) const;

  const FeaturizerConfig& config() const { return cfg_; }

 private:
  FeaturizerConfig cfg_;
  Matrix embed_;  // (d_in - 1) x 5
};

FramePacket featurize(const SyntheticScene& scene, int frame_index, const FeaturizerConfig& cfg);

}  // namespace dualmem
