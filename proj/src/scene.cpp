#include "dualmem/scene.hpp"

#include <map>

namespace dualmem {

TrajectoryKind trajectory_kind_from_string(const std::string& name) {
  if (name == "orbit") return TrajectoryKind::Orbit;
  if (name == "corridor") return TrajectoryKind::Corridor;
  if (name == "random-walk" || name == "random_walk") return TrajectoryKind::RandomWalk;
  throw ContractError("unknown trajectory kind: " + name);
}

std::string to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::Orbit: return "orbit";
    case TrajectoryKind::Corridor: return "corridor";
    case TrajectoryKind::RandomWalk: return "random-walk";
  }
  return "unknown";
}

namespace {

Eigen::Quaterniond look_rotation(const Eigen::Vector3d& forward_world,
                                 const Eigen::Vector3d& up_hint) {
  // camera looks along +z in its own frame
  const Eigen::Vector3d z = forward_world.normalized();
  Eigen::Vector3d x = up_hint.cross(z);
  if (x.norm() < 1e-9) x = Eigen::Vector3d::UnitX();  // forward parallel to up
  x.normalize();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return Eigen::Quaterniond(r).normalized();
}

}  // namespace

SyntheticScene generate_scene(uint64_t seed, int n_landmarks, TrajectoryKind kind,
                              int frame_count) {
  require(n_landmarks >= 4, "generate_scene: needs at least 4 landmarks");
  require(frame_count >= 2, "generate_scene: needs at least 2 frames");

  SyntheticScene scene;
  scene.seed = seed;
  scene.frame_count = frame_count;

  Rng rng(derive_seed(seed, 0x5ce11eULL));

  // landmarks in a bounded box; the corridor box is stretched along the path
  const bool corridor = kind == TrajectoryKind::Corridor;
  const double path_length = corridor ? 0.15 * frame_count + 4.0 : 0.0;
  scene.landmarks.resize(n_landmarks, 3);
  scene.landmark_normals.resize(n_landmarks, 3);
  for (int i = 0; i < n_landmarks; ++i) {
    if (corridor) {
      scene.landmarks.row(i) << rng.uniform(-2.0, path_length + 4.0), rng.uniform(-3.0, 3.0),
          rng.uniform(-3.0, 3.0);
    } else {
      scene.landmarks.row(i) << rng.uniform(-2.5, 2.5), rng.uniform(-2.5, 2.5),
          rng.uniform(-2.5, 2.5);
    }
    Eigen::Vector3d n(rng.normal(), rng.normal(), rng.normal());
    while (n.norm() < 1e-9) n = {rng.normal(), rng.normal(), rng.normal()};
    scene.landmark_normals.row(i) = n.normalized().transpose();
  }

  scene.trajectory.reserve(static_cast<size_t>(frame_count));
  const double dt = 1.0 / 30.0;
  switch (kind) {
    case TrajectoryKind::Orbit: {
      const double radius = 6.0;
      for (int i = 0; i < frame_count; ++i) {
        const double theta = 2.0 * M_PI * i / frame_count;
        TrajectoryPose p;
        p.timestamp = i * dt;
        p.translation = {radius * std::cos(theta), radius * std::sin(theta), 0.5};
        p.rotation = look_rotation(Eigen::Vector3d(0, 0, 0.5) - p.translation,
                                   Eigen::Vector3d::UnitZ());
        scene.trajectory.push_back(p);
      }
      break;
    }
    case TrajectoryKind::Corridor: {
      for (int i = 0; i < frame_count; ++i) {
        TrajectoryPose p;
        p.timestamp = i * dt;
        const double x = 0.15 * i;
        p.translation = {x, 0.4 * std::sin(0.08 * i), 0.1 * std::cos(0.05 * i)};
        p.rotation = look_rotation(Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitZ());
        scene.trajectory.push_back(p);
      }
      break;
    }
    case TrajectoryKind::RandomWalk: {
      TrajectoryPose p;
      p.timestamp = 0.0;
      p.rotation = Eigen::Quaterniond::Identity();
      p.translation = {0.0, 0.0, -6.0};  // start behind the landmark box, looking in
      scene.trajectory.push_back(p);
      for (int i = 1; i < frame_count; ++i) {
        TrajectoryPose next = scene.trajectory.back();
        next.timestamp = i * dt;
        Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
        if (axis.norm() < 1e-12) axis = Eigen::Vector3d::UnitY();
        const Eigen::AngleAxisd wobble(rng.uniform(-0.03, 0.03), axis.normalized());
        next.rotation = (next.rotation * Eigen::Quaterniond(wobble)).normalized();
        const Eigen::Vector3d step(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05),
                                   rng.uniform(0.0, 0.08));
        next.translation += next.rotation * step;
        scene.trajectory.push_back(next);
      }
      break;
    }
  }
  return scene;
}

Featurizer::Featurizer(const FeaturizerConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(derive_seed(cfg.seed, 0xfea7ULL));
  embed_ = gaussian_matrix(rng, cfg_.d_in - 1, 5, 1.0 / std::sqrt(5.0));
}

FramePacket Featurizer::packet(const SyntheticScene& scene, int frame_index) const {
  require(frame_index >= 0 && frame_index < scene.frame_count,
          "featurize: frame index out of range");
  const TrajectoryPose& pose = scene.trajectory[static_cast<size_t>(frame_index)];
  const Eigen::Matrix3d r_wc = pose.rotation.toRotationMatrix().transpose();  // world-to-camera
  const double tan_half = std::tan(cfg_.fov_deg * M_PI / 360.0);

  struct Bin {
    int count = 0;
    double depth_sum = 0.0;
    double bx_sum = 0.0;
    double by_sum = 0.0;
  };
  std::map<int, Bin> bins;  // ordered so token order is deterministic

  for (Eigen::Index i = 0; i < scene.landmarks.rows(); ++i) {
    const Eigen::Vector3d cam = r_wc * (scene.landmarks.row(i).transpose() - pose.translation);
    if (cam.z() <= cfg_.near_plane) continue;
    const double bx = cam.x() / cam.z();
    const double by = cam.y() / cam.z();
    if (std::abs(bx) > tan_half || std::abs(by) > tan_half) continue;
    const auto cell = [&](double b) {
      const double u = (b + tan_half) / (2.0 * tan_half);
      return std::min(cfg_.grid - 1, static_cast<int>(u * cfg_.grid));
    };
    Bin& bin = bins[cell(by) * cfg_.grid + cell(bx)];
    ++bin.count;
    bin.depth_sum += cam.z();
    bin.bx_sum += bx;
    bin.by_sum += by;
  }

  if (bins.empty()) {
    // designated empty-view token: zeros except the validity channel
    Matrix tokens = Matrix::Zero(1, cfg_.d_in);
    tokens(0, cfg_.d_in - 1) = 1.0;
    return FramePacket::from_tokens(std::move(tokens), frame_index);
  }

  Matrix tokens(static_cast<Eigen::Index>(bins.size()), cfg_.d_in);
  Eigen::Index row = 0;
  for (const auto& [cell, bin] : bins) {
    (void)cell;
    Eigen::Matrix<double, 5, 1> raw;
    raw << std::log1p(static_cast<double>(bin.count)), bin.depth_sum / bin.count,
        bin.bx_sum / bin.count, bin.by_sum / bin.count, 1.0;
    tokens.row(row).head(cfg_.d_in - 1) = (embed_ * raw).transpose();
    tokens(row, cfg_.d_in - 1) = 0.0;
    ++row;
  }
  return FramePacket::from_tokens(std::move(tokens), frame_index);
}

FramePacket featurize(const SyntheticScene& scene, int frame_index, const FeaturizerConfig& cfg) {
  return Featurizer(cfg).packet(scene, frame_index);
}

}  // namespace dualmem
