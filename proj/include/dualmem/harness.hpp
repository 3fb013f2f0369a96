// Streaming runner and experiments: per-frame records with footprint and
// timing probes, trajectory metrics against the synthetic ground truth,
// JSON-lines report serialization, and the state-retention experiment.
#pragma once

#include "dualmem/config.hpp"
#include "dualmem/engine.hpp"
#include "dualmem/metrics.hpp"
#include "dualmem/scene.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dualmem {

struct FrameRecord {
  int frame = 0;
  double ttt_loss = 0.0;
  double zeta_mean = 0.0;
  double zeta_min = 0.0;
  double zeta_max = 0.0;
  double token_gate_mean = 0.0;
  long long footprint_bytes = 0;
  double wall_ms = 0.0;  // not part of the canonical serialized form
};

struct RunSummary {
  int frames = 0;
  std::string traj_kind;
  std::optional<double> ate;
  std::optional<double> rpe_trans;
  std::optional<double> rpe_rot;
  std::optional<double> chamfer_cd;  // last-frame world points vs landmarks
  long long footprint_bytes = 0;
  bool footprint_constant = false;
  std::optional<std::string> error;  // set when the stream aborted early
};

struct RunReport {
  std::vector<FrameRecord> records;
  RunSummary summary;
};

struct RunResult {
  RunReport report;
  Trajectory estimated;
  Trajectory ground_truth;
};

RunResult run_stream(const SyntheticScene& scene, const RunConfig& cfg);

// JSON-lines: one object per frame record, then a {"summary": ...} line.
// Timing is opt-in so reports from identical (config, seed) runs are
// byte-identical.
std::string report_to_jsonl(const RunReport& report, bool include_timing = false);
RunReport report_from_jsonl(const std::string& text);

struct RetentionConfig {
  int steps = 32;
  std::optional<double> fixed_zeta = 1.0;  // nullopt: gate computed by a seeded MLP
  double noise_level = 1.0;
  uint64_t seed = 0;
  int n_state = 32;
  int c_state = 48;
  int d_in = 64;       // pseudo-frame width for the learned-gate mode
  int bottleneck = 24;
};

// Writes a fixed pattern into S_0, applies `steps` gated updates with i.i.d.
// Gaussian noise candidates, and reports ||S_t - S_0||_F / ||S_0||_F per step.
std::vector<double> retention_experiment(const RetentionConfig& cfg);

// The pattern written into S_0 (deterministic, independent of the seed).
StateTokens retention_initial_state(int n_state, int c_state);

// Closed-form E||S_t - S_0||_F^2 for fixed zeta and i.i.d. zero-mean noise:
// (1 - (1-z)^t)^2 * ||S_0||^2 + z^2 * sum_{j<t} (1-z)^{2j} * E||N||^2.
double retention_expected_sq(double zeta, int step, double s0_sq_norm, double noise_sq_total);

}  // namespace dualmem
