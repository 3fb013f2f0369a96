// dualmem CLI: gradcheck, param-count, run, metrics, retention, gen.
// Exit codes: 0 success, 1 contract violation / bad usage, 2 I/O error.

#include "dualmem/config.hpp"
#include "dualmem/engine.hpp"
#include "dualmem/harness.hpp"
#include "dualmem/io.hpp"
#include "dualmem/metrics.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace dualmem;

int cmd_gradcheck(uint64_t seed, int instances, double step) {
  double worst = 0.0;
  for (const int d_head : {2, 4, 8}) {
    const double err = gradcheck_max_rel_error(d_head, 3, instances, derive_seed(seed, d_head), step);
    std::cout << "d_head " << d_head << " max_rel_error " << err << "\n";
    worst = std::max(worst, err);
  }
  std::cout << "max_rel_error " << worst << "\n";
  if (worst >= 1e-6) {
    std::cerr << "gradcheck: analytic gradient disagrees with finite differences\n";
    return 1;
  }
  return 0;
}

int cmd_param_count() {
  const FastWeightConfig fw;  // full-scale defaults
  std::cout << "fast_weight_params " << fast_weight_param_count(fw) << "\n";
  std::cout << "gate_params " << gate_param_count(768, 1024, 384) << "\n";
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_path,
            const std::string& traj_out, const std::string& gt_out,
            const std::string& state_out, bool timing) {
  const RunConfig cfg = config_path.empty() ? default_run_config() : load_run_config(config_path);
  const SyntheticScene scene =
      generate_scene(cfg.scene_seed, cfg.n_landmarks, cfg.traj_kind, cfg.frames);
  const RunResult result = run_stream(scene, cfg);

  const std::string jsonl = report_to_jsonl(result.report, timing);
  if (out_path.empty() || out_path == "-") {
    std::cout << jsonl;
  } else {
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw IoError("run: cannot open " + out_path);
    f << jsonl;
    if (!f) throw IoError("run: write failed for " + out_path);
  }
  if (!traj_out.empty()) write_tum(traj_out, result.estimated);
  if (!gt_out.empty()) write_tum(gt_out, result.ground_truth);
  if (!state_out.empty()) {
    // re-run deterministically to capture the final engine state
    Engine engine(cfg.engine);
    Featurizer featurizer(cfg.featurizer);
    for (int i = 0; i < cfg.frames; ++i) engine.step(featurizer.packet(scene, i));
    engine.save_checkpoint(state_out);
  }

  const auto& s = result.report.summary;
  std::cerr << "frames " << s.frames << " footprint_bytes " << s.footprint_bytes
            << (s.footprint_constant ? " (constant)" : " (VARIED)");
  if (s.ate) std::cerr << " ate " << *s.ate;
  if (s.error) std::cerr << " error: " << *s.error;
  std::cerr << "\n";
  return s.error ? 1 : 0;
}

int cmd_metrics(const std::string& est_path, const std::string& gt_path, int delta,
                const std::string& pred_cloud, const std::string& gt_cloud, int nc_k,
                const std::string& depth_est, const std::string& depth_gt,
                const std::string& depth_mode) {
  bool did_anything = false;
  std::cout.precision(12);
  if (!est_path.empty() || !gt_path.empty()) {
    require(!est_path.empty() && !gt_path.empty(), "metrics: --est and --gt go together");
    const Trajectory est = read_tum(est_path);
    const Trajectory gt = read_tum(gt_path);
    std::cout << "ATE " << ate(est, gt) << "\n";
    const RpeResult r = rpe(est, gt, delta);
    std::cout << "RPE_trans " << r.trans << "\nRPE_rot " << r.rot_deg << "\n";
    did_anything = true;
  }
  if (!pred_cloud.empty() || !gt_cloud.empty()) {
    require(!pred_cloud.empty() && !gt_cloud.empty(),
            "metrics: --pred-cloud and --gt-cloud go together");
    const CloudData pred = read_cloud(pred_cloud);
    const CloudData truth = read_cloud(gt_cloud);
    const ChamferResult c = chamfer(pred.points, truth.points);
    std::cout << "CD " << c.cd << "\naccuracy " << c.accuracy << "\ncompleteness "
              << c.completeness << "\n";
    if (pred.points.rows() > nc_k && truth.points.rows() > nc_k)
      std::cout << "NC " << normal_consistency(pred.points, truth.points, nc_k) << "\n";
    did_anything = true;
  }
  if (!depth_est.empty() || !depth_gt.empty()) {
    require(!depth_est.empty() && !depth_gt.empty(),
            "metrics: --depth-est and --depth-gt go together");
    const DepthFrame frame = depth_frame_from_csv(depth_est, depth_gt);
    const DepthMode mode = depth_mode == "per-seq" ? DepthMode::PerSequenceScaled
                                                   : DepthMode::Metric;
    const DepthMetrics m = depth_metrics({frame}, mode);
    std::cout << "AbsRel " << m.abs_rel << "\ndelta_1.25 " << m.delta_125 << "\n";
    did_anything = true;
  }
  require(did_anything, "metrics: nothing to compute, pass --est/--gt, clouds, or depth maps");
  return 0;
}

int cmd_retention(int steps, const std::string& zeta_arg, double noise, uint64_t seed,
                  const std::string& out_path) {
  RetentionConfig cfg;
  cfg.steps = steps;
  cfg.noise_level = noise;
  cfg.seed = seed;
  if (zeta_arg == "learned") {
    cfg.fixed_zeta = std::nullopt;
  } else {
    try {
      cfg.fixed_zeta = std::stod(zeta_arg);
    } catch (const std::exception&) {
      throw ContractError("retention: --zeta takes a number or 'learned'");
    }
  }
  const std::vector<double> curve = retention_experiment(cfg);

  std::ostringstream csv;
  csv.precision(12);
  csv << "step,retention_error\n";
  for (size_t t = 0; t < curve.size(); ++t) csv << (t + 1) << ',' << curve[t] << '\n';
  if (out_path.empty() || out_path == "-") {
    std::cout << csv.str();
  } else {
    std::ofstream f(out_path);
    if (!f) throw IoError("retention: cannot open " + out_path);
    f << csv.str();
  }
  return 0;
}

int cmd_gen(uint64_t seed, int landmarks, const std::string& traj, int frames,
            const std::string& cloud_out, const std::string& traj_out) {
  const SyntheticScene scene =
      generate_scene(seed, landmarks, trajectory_kind_from_string(traj), frames);
  if (!cloud_out.empty()) {
    CloudData cloud;
    cloud.points = scene.landmarks;
    cloud.normals = scene.landmark_normals;
    write_ply(cloud_out, cloud);
  }
  if (!traj_out.empty()) write_tum(traj_out, scene.trajectory);
  std::cout << "landmarks " << scene.landmarks.rows() << " frames " << scene.frame_count << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dual-memory streaming recurrent engine"};
  app.require_subcommand(1);

  uint64_t gc_seed = 7;
  int gc_instances = 40;
  double gc_step = 1e-5;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
  gradcheck->add_option("--seed", gc_seed, "base seed");
  gradcheck->add_option("--instances", gc_instances, "instances per head width");
  gradcheck->add_option("--step", gc_step, "central-difference step");

  app.add_subcommand("param-count", "parameter counts at full-scale dims");

  std::string run_config, run_out = "report.jsonl", run_traj, run_gt, run_state;
  bool run_timing = false;
  auto* run = app.add_subcommand("run", "stream a synthetic scene");
  run->add_option("--config", run_config, "JSON config path (defaults to toy dims)");
  run->add_option("--out", run_out, "report output path, '-' for stdout");
  run->add_option("--traj-out", run_traj, "write estimated trajectory (TUM)");
  run->add_option("--gt-out", run_gt, "write ground-truth trajectory (TUM)");
  run->add_option("--save-state", run_state, "write final engine checkpoint");
  run->add_flag("--timing", run_timing, "include per-frame wall clock in the report");

  std::string m_est, m_gt, m_pred_cloud, m_gt_cloud, m_depth_est, m_depth_gt,
      m_depth_mode = "metric";
  int m_delta = 1, m_nc_k = 8;
  auto* metrics = app.add_subcommand("metrics", "evaluate trajectories, clouds, depth maps");
  metrics->add_option("--est", m_est, "estimated trajectory (TUM)");
  metrics->add_option("--gt", m_gt, "ground-truth trajectory (TUM)");
  metrics->add_option("--delta", m_delta, "RPE frame offset");
  metrics->add_option("--pred-cloud", m_pred_cloud, "predicted cloud (.ply/.csv)");
  metrics->add_option("--gt-cloud", m_gt_cloud, "ground-truth cloud (.ply/.csv)");
  metrics->add_option("--nc-k", m_nc_k, "neighbors for normal estimation");
  metrics->add_option("--depth-est", m_depth_est, "estimated depth (CSV matrix)");
  metrics->add_option("--depth-gt", m_depth_gt, "ground-truth depth (CSV matrix)");
  metrics->add_option("--depth-mode", m_depth_mode, "metric | per-seq");

  int r_steps = 32;
  std::string r_zeta = "1.0", r_out;
  double r_noise = 1.0;
  uint64_t r_seed = 0;
  auto* retention = app.add_subcommand("retention", "state retention under noisy updates");
  retention->add_option("--steps", r_steps, "update steps");
  retention->add_option("--zeta", r_zeta, "fixed gate value or 'learned'");
  retention->add_option("--noise", r_noise, "candidate noise stddev");
  retention->add_option("--seed", r_seed, "noise seed");
  retention->add_option("--out", r_out, "CSV output path, '-' for stdout");

  uint64_t g_seed = 0;
  int g_landmarks = 256, g_frames = 64;
  std::string g_traj = "orbit", g_cloud_out, g_traj_out;
  auto* gen = app.add_subcommand("gen", "emit a synthetic scene to disk");
  gen->add_option("--seed", g_seed, "scene seed");
  gen->add_option("--landmarks", g_landmarks, "landmark count");
  gen->add_option("--traj", g_traj, "orbit | corridor | random-walk");
  gen->add_option("--frames", g_frames, "frame count");
  gen->add_option("--cloud-out", g_cloud_out, "landmark cloud output (.ply)");
  gen->add_option("--traj-out", g_traj_out, "trajectory output (TUM)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (gradcheck->parsed()) return cmd_gradcheck(gc_seed, gc_instances, gc_step);
    if (app.get_subcommand("param-count")->parsed()) return cmd_param_count();
    if (run->parsed())
      return cmd_run(run_config, run_out, run_traj, run_gt, run_state, run_timing);
    if (metrics->parsed())
      return cmd_metrics(m_est, m_gt, m_delta, m_pred_cloud, m_gt_cloud, m_nc_k, m_depth_est,
                         m_depth_gt, m_depth_mode);
    if (retention->parsed()) return cmd_retention(r_steps, r_zeta, r_noise, r_seed, r_out);
    if (gen->parsed())
      return cmd_gen(g_seed, g_landmarks, g_traj, g_frames, g_cloud_out, g_traj_out);
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
