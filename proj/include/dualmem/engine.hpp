// The per-frame recurrent step: pose-prior read, surrogate decode, implicit
// memory write (decay + learning-rate scaled alignment gradient), explicit
// memory write (channel gate composed with the plug-in token gate), and the
// prediction heads. Each memory is written exactly once per step; a failed
// step leaves both untouched.
#pragma once

#include "dualmem/decoder.hpp"
#include "dualmem/explicit_state.hpp"
#include "dualmem/fast_weights.hpp"
#include "dualmem/heads.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace dualmem {

struct EngineConfig {
  FastWeightConfig fw;
  int n_state = 768;
  int c_state = 768;
  int bottleneck = 384;
  DecoderConfig decoder;
  GateStrategy strategy = GateStrategy::overwrite();
  uint64_t seed = 1;

  void validate() const {
    fw.validate();
    decoder.validate();
    require(n_state > 0 && c_state > 0 && bottleneck > 0, "EngineConfig: dims must be positive");
  }

  // Toy dims used throughout the test suite.
  static EngineConfig toy();
};

struct StepOutput {
  Vector posterior_pose;       // d_model
  Matrix refined_tokens;       // T x d_in
  StateTokens candidate_state;
  TrajectoryPose predicted_pose;
  PointMap local_points;
  PointMap world_points;

  // per-step diagnostics consumed by the stream harness
  double ttt_loss = 0.0;         // <prior, posterior>
  double zeta_mean = 0.0;
  double zeta_min = 0.0;
  double zeta_max = 0.0;
  double token_gate_mean = 0.0;
};

class Engine {
 public:
  explicit Engine(const EngineConfig& cfg);

  StepOutput step(const FramePacket& frame);

  const EngineConfig& config() const { return cfg_; }
  const FastWeights& fast_weights() const { return fast_; }
  const StateTokens& state() const { return state_; }
  const SlowParams& slow_params() const { return slow_; }
  const GateParams& gate_params() const { return gate_; }
  const SurrogateDecoder& decoder() const { return decoder_; }
  const PoseHead& pose_head() const { return pose_head_; }
  const PointHead& self_head() const { return self_head_; }
  const PointHead& world_head() const { return world_head_; }

  // Exact byte size of the four persistent blocks (fast weights, slow params,
  // gate params, state tokens).
  long long footprint_bytes() const;

  // Test/experiment hook: force every channel-gate entry to a fixed value.
  void set_zeta_override(std::optional<double> zeta);
  // Test/experiment hook: bypass the configured strategy with an all-ones gate.
  void set_token_gate_override(std::optional<double> g);

  void save_checkpoint(const std::string& path) const;
  void load_checkpoint(const std::string& path);

 private:
  EngineConfig cfg_;
  SlowParams slow_;
  FastWeights fast_;
  GateParams gate_;
  StateTokens state_;
  SurrogateDecoder decoder_;
  PoseHead pose_head_;
  PointHead self_head_;
  PointHead world_head_;
  std::optional<double> zeta_override_;
  std::optional<double> token_gate_override_;
};

}  // namespace dualmem
