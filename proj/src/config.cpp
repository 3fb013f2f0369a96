#include "dualmem/config.hpp"

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace dualmem {

using nlohmann::json;

RunConfig default_run_config() {
  RunConfig cfg;
  cfg.engine = EngineConfig::toy();
  cfg.featurizer.d_in = cfg.engine.fw.d_in;
  cfg.featurizer.grid = 4;
  cfg.featurizer.seed = cfg.scene_seed;
  return cfg;
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw IoError(std::string("config: invalid JSON: ") + e.what());
  }

  RunConfig cfg = default_run_config();
  try {
    if (j.contains("dims")) {
      const auto& d = j["dims"];
      if (d.contains("d_in")) cfg.engine.fw.d_in = d["d_in"].get<int>();
      if (d.contains("d_model")) cfg.engine.fw.d_model = d["d_model"].get<int>();
      if (d.contains("heads")) cfg.engine.fw.heads = d["heads"].get<int>();
      if (d.contains("d_head")) cfg.engine.fw.d_head = d["d_head"].get<int>();
      if (d.contains("n_state")) cfg.engine.n_state = d["n_state"].get<int>();
      if (d.contains("c_state")) cfg.engine.c_state = d["c_state"].get<int>();
      if (d.contains("bottleneck")) cfg.engine.bottleneck = d["bottleneck"].get<int>();
    }
    if (j.contains("gamma")) cfg.engine.fw.gamma = j["gamma"].get<double>();
    if (j.contains("c_base")) cfg.engine.fw.c_base = j["c_base"].get<double>();
    if (j.contains("seeds")) {
      const auto& s = j["seeds"];
      if (s.contains("engine")) cfg.engine.seed = s["engine"].get<uint64_t>();
      if (s.contains("scene")) cfg.scene_seed = s["scene"].get<uint64_t>();
    }
    if (j.contains("gate_strategy")) {
      const auto& g = j["gate_strategy"];
      const std::string kind = g.value("kind", "overwrite");
      if (kind == "overwrite") {
        cfg.engine.strategy = GateStrategy::overwrite();
      } else if (kind == "constant") {
        cfg.engine.strategy = GateStrategy::constant(g.value("g0", 1.0));
      } else if (kind == "similarity") {
        cfg.engine.strategy = GateStrategy::similarity(g.value("tau", 1.0));
      } else {
        throw ContractError("config: unknown gate_strategy kind: " + kind);
      }
    }
    if (j.contains("decoder_depth")) cfg.engine.decoder.depth = j["decoder_depth"].get<int>();
    if (j.contains("decoder_latent")) cfg.engine.decoder.d_model = j["decoder_latent"].get<int>();
    if (j.contains("decoder_heads")) cfg.engine.decoder.heads = j["decoder_heads"].get<int>();
    if (j.contains("traj_kind"))
      cfg.traj_kind = trajectory_kind_from_string(j["traj_kind"].get<std::string>());
    if (j.contains("frames")) cfg.frames = j["frames"].get<int>();
    if (j.contains("n_landmarks")) cfg.n_landmarks = j["n_landmarks"].get<int>();
    if (j.contains("token_grid")) cfg.featurizer.grid = j["token_grid"].get<int>();
  } catch (const json::exception& e) {
    throw IoError(std::string("config: bad field type: ") + e.what());
  }

  if (const char* env = std::getenv("DUALMEM_SEED")) {
    const uint64_t s = std::strtoull(env, nullptr, 10);
    cfg.engine.seed = s;
    cfg.scene_seed = s;
  }

  cfg.featurizer.d_in = cfg.engine.fw.d_in;
  cfg.featurizer.seed = cfg.scene_seed;
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("config: cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str());
}

std::string run_config_to_json(const RunConfig& cfg) {
  json j;
  j["dims"] = {{"d_in", cfg.engine.fw.d_in},       {"d_model", cfg.engine.fw.d_model},
               {"heads", cfg.engine.fw.heads},     {"d_head", cfg.engine.fw.d_head},
               {"n_state", cfg.engine.n_state},    {"c_state", cfg.engine.c_state},
               {"bottleneck", cfg.engine.bottleneck}};
  j["gamma"] = cfg.engine.fw.gamma;
  j["c_base"] = cfg.engine.fw.c_base;
  j["seeds"] = {{"engine", cfg.engine.seed}, {"scene", cfg.scene_seed}};
  switch (cfg.engine.strategy.kind) {
    case GateStrategy::Kind::Overwrite:
      j["gate_strategy"] = {{"kind", "overwrite"}};
      break;
    case GateStrategy::Kind::Constant:
      j["gate_strategy"] = {{"kind", "constant"}, {"g0", cfg.engine.strategy.constant_value}};
      break;
    case GateStrategy::Kind::Similarity:
      j["gate_strategy"] = {{"kind", "similarity"}, {"tau", cfg.engine.strategy.temperature}};
      break;
  }
  j["decoder_depth"] = cfg.engine.decoder.depth;
  j["decoder_latent"] = cfg.engine.decoder.d_model;
  j["decoder_heads"] = cfg.engine.decoder.heads;
  j["traj_kind"] = to_string(cfg.traj_kind);
  j["frames"] = cfg.frames;
  j["n_landmarks"] = cfg.n_landmarks;
  j["token_grid"] = cfg.featurizer.grid;
  return j.dump(2);
}

}  // namespace dualmem
