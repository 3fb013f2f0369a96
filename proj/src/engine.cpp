#include "dualmem/engine.hpp"

#include <fstream>

namespace dualmem {

EngineConfig EngineConfig::toy() {
  EngineConfig cfg;
  cfg.fw.d_in = 64;
  cfg.fw.d_model = 48;
  cfg.fw.heads = 4;
  cfg.fw.d_head = 12;
  cfg.n_state = 32;
  cfg.c_state = 48;
  cfg.bottleneck = 24;
  cfg.decoder.depth = 2;
  cfg.decoder.d_model = 32;
  cfg.decoder.heads = 4;
  return cfg;
}

Engine::Engine(const EngineConfig& cfg)
    : cfg_(cfg),
      slow_(SlowParams::init(cfg.fw, derive_seed(cfg.seed, 1))),
      fast_(FastWeights::random(cfg.fw, derive_seed(cfg.seed, 2))),
      gate_(GateParams::random(cfg.c_state, cfg.fw.d_in, cfg.bottleneck, derive_seed(cfg.seed, 3))),
      state_(StateTokens::random(cfg.n_state, cfg.c_state, derive_seed(cfg.seed, 4))),
      decoder_(
          [&] {
            DecoderConfig d = cfg.decoder;
            d.seed = derive_seed(cfg.seed, 5);
            return d;
          }(),
          cfg.fw.d_model, cfg.fw.d_in, cfg.c_state),
      pose_head_(PoseHead::random(cfg.fw.d_model, derive_seed(cfg.seed, 6))),
      self_head_(PointHead::random(PointHeadMode::Self, cfg.fw.d_in, cfg.fw.d_model,
                                   derive_seed(cfg.seed, 7))),
      world_head_(PointHead::random(PointHeadMode::World, cfg.fw.d_in, cfg.fw.d_model,
                                    derive_seed(cfg.seed, 8))) {
  cfg_.validate();
}

void Engine::set_zeta_override(std::optional<double> zeta) { zeta_override_ = zeta; }
void Engine::set_token_gate_override(std::optional<double> g) { token_gate_override_ = g; }

StepOutput Engine::step(const FramePacket& frame) {
  frame.validate();
  require(frame.width() == cfg_.fw.d_in, "step: frame token width != d_in");

  // Everything below works on locals; the two memories are committed at the
  // very end so any thrown error leaves them at their pre-step values.
  const std::vector<Vector> queries = head_queries(cfg_.fw, slow_, frame);
  const Vector prior = read_prior_from_queries(cfg_.fw, fast_, slow_, queries);

  DecodeResult decoded = decoder_.decode(prior, frame, state_);

  // implicit memory write
  const FastWeightGradients grads =
      ttt_gradient(cfg_.fw, fast_, queries, decoded.posterior_pose);
  const Vector alpha = predict_decay(cfg_.fw, slow_, frame);
  const Matrix eta = predict_lr(cfg_.fw, slow_, frame);
  FastWeights next_fast = update_weights(fast_, grads, alpha, eta);

  // explicit memory write
  Matrix zeta;
  if (zeta_override_) {
    zeta = Matrix::Constant(state_.rows(), state_.cols(), *zeta_override_);
  } else {
    zeta = compute_gate(gate_, frame, state_);
  }
  TokenGate tg;
  if (token_gate_override_) {
    tg.g = Vector::Constant(state_.rows(), *token_gate_override_);
  } else {
    tg = apply_strategy(cfg_.strategy, state_, decoded.candidate_state);
  }
  StateTokens next_state =
      gated_update_with_token_gate(state_, decoded.candidate_state, zeta, tg);

  StepOutput out;
  out.ttt_loss = ttt_loss(prior, decoded.posterior_pose);
  out.zeta_mean = zeta.mean();
  out.zeta_min = zeta.minCoeff();
  out.zeta_max = zeta.maxCoeff();
  out.token_gate_mean = tg.g.mean();
  out.predicted_pose = head_pose(pose_head_, decoded.posterior_pose);
  out.predicted_pose.timestamp = static_cast<double>(frame.frame_index);
  out.local_points = head_points(self_head_, decoded.refined_tokens, decoded.posterior_pose);
  out.world_points = head_points(world_head_, decoded.refined_tokens, decoded.posterior_pose);
  out.posterior_pose = std::move(decoded.posterior_pose);
  out.refined_tokens = std::move(decoded.refined_tokens);
  out.candidate_state = std::move(decoded.candidate_state);

  fast_ = std::move(next_fast);
  state_ = std::move(next_state);
  return out;
}

long long Engine::footprint_bytes() const {
  const long long entries = static_cast<long long>(fast_.entry_count()) + slow_.entry_count() +
                            gate_.entry_count() + state_.tokens.size();
  return entries * static_cast<long long>(sizeof(double));
}

namespace {

void write_matrix(std::ostream& os, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      os.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
}

void read_matrix(std::istream& is, Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      double v = 0.0;
      is.read(reinterpret_cast<char*>(&v), sizeof(v));
      m(i, j) = v;
    }
}

}  // namespace

void Engine::save_checkpoint(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("save_checkpoint: cannot open " + path);
  write_state_tokens(f, state_);
  const uint64_t heads = static_cast<uint64_t>(fast_.heads.size());
  const uint64_t d_head = static_cast<uint64_t>(cfg_.fw.d_head);
  f.write(reinterpret_cast<const char*>(&heads), sizeof(heads));
  f.write(reinterpret_cast<const char*>(&d_head), sizeof(d_head));
  for (const auto& h : fast_.heads) {
    write_matrix(f, h.gate);
    write_matrix(f, h.down);
    write_matrix(f, h.up);
  }
  if (!f) throw IoError("save_checkpoint: write failed for " + path);
}

void Engine::load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("load_checkpoint: cannot open " + path);
  StateTokens st = read_state_tokens(f);
  require(st.rows() == cfg_.n_state && st.cols() == cfg_.c_state,
          "load_checkpoint: state shape does not match engine config");
  uint64_t heads = 0, d_head = 0;
  f.read(reinterpret_cast<char*>(&heads), sizeof(heads));
  f.read(reinterpret_cast<char*>(&d_head), sizeof(d_head));
  if (!f) throw IoError("load_checkpoint: truncated fast-weight header");
  require(heads == static_cast<uint64_t>(cfg_.fw.heads) &&
              d_head == static_cast<uint64_t>(cfg_.fw.d_head),
          "load_checkpoint: fast-weight shape does not match engine config");
  FastWeights fw = FastWeights::zero(cfg_.fw);
  for (auto& h : fw.heads) {
    read_matrix(f, h.gate);
    read_matrix(f, h.down);
    read_matrix(f, h.up);
  }
  if (!f) throw IoError("load_checkpoint: truncated fast-weight payload");
  state_ = std::move(st);
  fast_ = std::move(fw);
}

}  // namespace dualmem
