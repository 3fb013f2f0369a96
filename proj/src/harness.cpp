#include "dualmem/harness.hpp"

#include <json.hpp>

#include <chrono>
#include <sstream>

namespace dualmem {

using nlohmann::json;

RunResult run_stream(const SyntheticScene& scene, const RunConfig& cfg) {
  cfg.validate();
  require(scene.frame_count == cfg.frames, "run_stream: scene frame count != config frames");

  Engine engine(cfg.engine);
  Featurizer featurizer(cfg.featurizer);

  RunResult result;
  result.ground_truth = scene.trajectory;
  result.report.summary.frames = cfg.frames;
  result.report.summary.traj_kind = to_string(cfg.traj_kind);
  result.report.records.reserve(static_cast<size_t>(cfg.frames));

  PointCloud last_world_points;
  for (int i = 0; i < cfg.frames; ++i) {
    FrameRecord rec;
    rec.frame = i;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const FramePacket packet = featurizer.packet(scene, i);
      const StepOutput out = engine.step(packet);
      rec.ttt_loss = out.ttt_loss;
      rec.zeta_mean = out.zeta_mean;
      rec.zeta_min = out.zeta_min;
      rec.zeta_max = out.zeta_max;
      rec.token_gate_mean = out.token_gate_mean;
      rec.footprint_bytes = engine.footprint_bytes();

      TrajectoryPose est = out.predicted_pose;
      est.timestamp = scene.trajectory[static_cast<size_t>(i)].timestamp;
      result.estimated.push_back(est);
      if (i == cfg.frames - 1) last_world_points = out.world_points.points;
    } catch (const std::exception& e) {
      result.report.summary.error = e.what();
      break;  // truncated report with the error recorded
    }
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0).count();
    result.report.records.push_back(rec);
  }

  auto& summary = result.report.summary;
  summary.frames = static_cast<int>(result.report.records.size());
  if (!result.report.records.empty()) {
    long long lo = result.report.records.front().footprint_bytes, hi = lo;
    for (const auto& r : result.report.records) {
      lo = std::min(lo, r.footprint_bytes);
      hi = std::max(hi, r.footprint_bytes);
    }
    summary.footprint_bytes = hi;
    summary.footprint_constant = lo == hi;
  }
  if (!summary.error && result.estimated.size() >= 3) {
    summary.ate = ate(result.estimated, result.ground_truth);
    const RpeResult r = rpe(result.estimated, result.ground_truth, 1);
    summary.rpe_trans = r.trans;
    summary.rpe_rot = r.rot_deg;
  }
  if (!summary.error && last_world_points.rows() > 0)
    summary.chamfer_cd = chamfer(last_world_points, scene.landmarks).cd;
  return result;
}

std::string report_to_jsonl(const RunReport& report, bool include_timing) {
  std::ostringstream out;
  for (const auto& r : report.records) {
    json j = {{"frame", r.frame},
              {"ttt_loss", r.ttt_loss},
              {"zeta_mean", r.zeta_mean},
              {"zeta_min", r.zeta_min},
              {"zeta_max", r.zeta_max},
              {"token_gate_mean", r.token_gate_mean},
              {"footprint_bytes", r.footprint_bytes}};
    if (include_timing) j["wall_ms"] = r.wall_ms;
    out << j.dump() << '\n';
  }
  json s;
  s["frames"] = report.summary.frames;
  s["traj_kind"] = report.summary.traj_kind;
  s["ate"] = report.summary.ate ? json(*report.summary.ate) : json(nullptr);
  s["rpe_trans"] = report.summary.rpe_trans ? json(*report.summary.rpe_trans) : json(nullptr);
  s["rpe_rot"] = report.summary.rpe_rot ? json(*report.summary.rpe_rot) : json(nullptr);
  s["chamfer_cd"] = report.summary.chamfer_cd ? json(*report.summary.chamfer_cd) : json(nullptr);
  s["footprint_bytes"] = report.summary.footprint_bytes;
  s["footprint_constant"] = report.summary.footprint_constant;
  if (report.summary.error) s["error"] = *report.summary.error;
  out << json{{"summary", s}}.dump() << '\n';
  return out.str();
}

RunReport report_from_jsonl(const std::string& text) {
  RunReport report;
  std::istringstream in(text);
  std::string line;
  bool saw_summary = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw IoError(std::string("report: invalid JSON line: ") + e.what());
    }
    if (j.contains("summary")) {
      const auto& s = j["summary"];
      report.summary.frames = s.value("frames", 0);
      report.summary.traj_kind = s.value("traj_kind", "");
      auto opt = [&](const char* key) -> std::optional<double> {
        if (!s.contains(key) || s[key].is_null()) return std::nullopt;
        return s[key].get<double>();
      };
      report.summary.ate = opt("ate");
      report.summary.rpe_trans = opt("rpe_trans");
      report.summary.rpe_rot = opt("rpe_rot");
      report.summary.chamfer_cd = opt("chamfer_cd");
      report.summary.footprint_bytes = s.value("footprint_bytes", 0LL);
      report.summary.footprint_constant = s.value("footprint_constant", false);
      if (s.contains("error")) report.summary.error = s["error"].get<std::string>();
      saw_summary = true;
    } else {
      FrameRecord r;
      r.frame = j.value("frame", 0);
      r.ttt_loss = j.value("ttt_loss", 0.0);
      r.zeta_mean = j.value("zeta_mean", 0.0);
      r.zeta_min = j.value("zeta_min", 0.0);
      r.zeta_max = j.value("zeta_max", 0.0);
      r.token_gate_mean = j.value("token_gate_mean", 0.0);
      r.footprint_bytes = j.value("footprint_bytes", 0LL);
      r.wall_ms = j.value("wall_ms", 0.0);
      report.records.push_back(r);
    }
  }
  if (!saw_summary) throw IoError("report: missing summary line");
  return report;
}

StateTokens retention_initial_state(int n_state, int c_state) {
  require(n_state > 0 && c_state > 0, "retention: dims must be positive");
  StateTokens st;
  st.tokens.resize(n_state, c_state);
  for (int i = 0; i < n_state; ++i)
    for (int j = 0; j < c_state; ++j) st.tokens(i, j) = std::sin(0.37 * i + 0.61 * j + 0.5);
  return st;
}

std::vector<double> retention_experiment(const RetentionConfig& cfg) {
  require(cfg.steps >= 2, "retention: needs at least 2 steps");
  if (cfg.fixed_zeta)
    require(*cfg.fixed_zeta >= 0.0 && *cfg.fixed_zeta <= 1.0,
            "retention: fixed zeta outside [0,1]");

  const StateTokens initial = retention_initial_state(cfg.n_state, cfg.c_state);
  const double s0_norm = initial.tokens.norm();
  StateTokens state = initial;

  GateParams gate;
  if (!cfg.fixed_zeta)
    gate = GateParams::random(cfg.c_state, cfg.d_in, cfg.bottleneck, derive_seed(cfg.seed, 0x6a7eULL));

  Rng rng(derive_seed(cfg.seed, 0x401feULL));
  std::vector<double> curve;
  curve.reserve(static_cast<size_t>(cfg.steps));
  for (int t = 0; t < cfg.steps; ++t) {
    StateTokens candidate;
    candidate.tokens = gaussian_matrix(rng, cfg.n_state, cfg.c_state, cfg.noise_level);

    Matrix zeta;
    if (cfg.fixed_zeta) {
      zeta = Matrix::Constant(cfg.n_state, cfg.c_state, *cfg.fixed_zeta);
    } else {
      const FramePacket pseudo_frame =
          FramePacket::from_tokens(gaussian_matrix(rng, 1, cfg.d_in, 1.0), t);
      zeta = compute_gate(gate, pseudo_frame, state);
    }
    state = gated_update(state, candidate, zeta);
    curve.push_back((state.tokens - initial.tokens).norm() / s0_norm);
  }
  return curve;
}

double retention_expected_sq(double zeta, int step, double s0_sq_norm, double noise_sq_total) {
  require(zeta >= 0.0 && zeta <= 1.0, "retention_expected_sq: zeta outside [0,1]");
  require(step >= 1, "retention_expected_sq: step must be >= 1");
  const double keep = 1.0 - zeta;
  double geometric = 0.0;
  for (int j = 0; j < step; ++j) geometric += std::pow(keep * keep, j);
  const double drift = 1.0 - std::pow(keep, step);
  return drift * drift * s0_sq_norm + zeta * zeta * geometric * noise_sq_total;
}

}  // namespace dualmem
