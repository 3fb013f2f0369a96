// JSON run configuration for the streaming harness and CLI.
#pragma once

#include "dualmem/engine.hpp"
#include "dualmem/scene.hpp"

#include <string>

namespace dualmem {

struct RunConfig {
  EngineConfig engine;
  FeaturizerConfig featurizer;
  uint64_t scene_seed = 7;
  TrajectoryKind traj_kind = TrajectoryKind::Orbit;
  int frames = 200;
  int n_landmarks = 256;

  void validate() const {
    engine.validate();
    featurizer.validate();
    require(featurizer.d_in == engine.fw.d_in, "RunConfig: featurizer d_in != engine d_in");
    require(frames >= 2, "RunConfig: frames must be >= 2");
    require(n_landmarks >= 4, "RunConfig: needs at least 4 landmarks");
  }
};

// Toy-dimension defaults; every key in the JSON file is optional.
RunConfig default_run_config();

// Keys: dims {d_in, d_model, heads, d_head, n_state, c_state, bottleneck},
// seeds {engine, scene}, gate_strategy {kind, g0|tau}, decoder_depth,
// traj_kind, frames; plus optional n_landmarks, token_grid, decoder_latent,
// decoder_heads, gamma, c_base. The DUALMEM_SEED environment variable
// overrides both seeds.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text);

std::string run_config_to_json(const RunConfig& cfg);

}  // namespace dualmem
