#include "dualmem/fast_weights.hpp"

namespace dualmem {

void FastWeightConfig::validate() const {
  require(d_in > 0 && d_model > 0 && heads > 0 && d_head > 0,
          "FastWeightConfig: dims must be positive");
  require(d_model == heads * d_head, "FastWeightConfig: d_model != heads * d_head");
  require(gamma > 0.0 && gamma < 1.0, "FastWeightConfig: gamma outside (0,1)");
}

FastWeights FastWeights::zero(const FastWeightConfig& cfg) {
  cfg.validate();
  FastWeights fw;
  fw.heads.resize(cfg.heads);
  for (auto& h : fw.heads) {
    h.gate = Matrix::Zero(cfg.d_head, cfg.d_head);
    h.down = Matrix::Zero(cfg.d_head, cfg.d_head);
    h.up = Matrix::Zero(cfg.d_head, cfg.d_head);
  }
  return fw;
}

FastWeights FastWeights::random(const FastWeightConfig& cfg, uint64_t seed, double stddev) {
  cfg.validate();
  Rng rng(seed);
  FastWeights fw;
  fw.heads.resize(cfg.heads);
  for (auto& h : fw.heads) {
    h.gate = gaussian_matrix(rng, cfg.d_head, cfg.d_head, stddev);
    h.down = gaussian_matrix(rng, cfg.d_head, cfg.d_head, stddev);
    h.up = gaussian_matrix(rng, cfg.d_head, cfg.d_head, stddev);
  }
  return fw;
}

Eigen::Index FastWeights::entry_count() const {
  Eigen::Index n = 0;
  for (const auto& h : heads) n += h.gate.size() + h.down.size() + h.up.size();
  return n;
}

FastWeightGradients FastWeightGradients::zero(const FastWeightConfig& cfg) {
  FastWeightGradients g;
  g.heads.resize(cfg.heads);
  for (auto& h : g.heads) {
    h.gate = Matrix::Zero(cfg.d_head, cfg.d_head);
    h.down = Matrix::Zero(cfg.d_head, cfg.d_head);
    h.up = Matrix::Zero(cfg.d_head, cfg.d_head);
  }
  return g;
}

SlowParams SlowParams::init(const FastWeightConfig& cfg, uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  SlowParams sp;
  sp.query_w = gaussian_matrix(rng, cfg.d_model, cfg.d_in, 1.0 / std::sqrt(cfg.d_in));
  sp.query_b = Vector::Zero(cfg.d_model);
  sp.lr_w = Matrix::Zero(3 * cfg.heads, cfg.d_in);
  sp.lr_b = Vector::Zero(3 * cfg.heads);
  sp.decay_w = Matrix::Zero(cfg.heads, cfg.d_in);
  sp.decay_b = Vector::Zero(cfg.heads);
  // Small readout scale keeps the posterior magnitude inside the contractive
  // regime of the fast-weight update; with eta starting at softplus(c_base)
  // a unit-scale readout lets the Hebbian term outrun the decay.
  sp.readout_scale = Vector::Constant(cfg.d_model, 0.02);
  sp.out_w = gaussian_matrix(rng, cfg.d_model, cfg.d_model, 1.0 / std::sqrt(cfg.d_model));
  sp.out_b = Vector::Zero(cfg.d_model);
  return sp;
}

Eigen::Index SlowParams::entry_count() const {
  return query_w.size() + query_b.size() + lr_w.size() + lr_b.size() + decay_w.size() +
         decay_b.size() + readout_scale.size() + out_w.size() + out_b.size();
}

Vector swiglu_forward(const SwigluWeights& w, const Vector& x) {
  const Eigen::Index d = x.size();
  require(w.gate.rows() == d && w.gate.cols() == d && w.down.rows() == d && w.down.cols() == d &&
              w.up.rows() == d && w.up.cols() == d,
          "swiglu_forward: weight/input dimension mismatch");
  const Vector a = w.gate * x;
  const Vector g = w.up * x;
  Vector h(d);
  for (Eigen::Index i = 0; i < d; ++i) h(i) = silu(a(i)) * g(i);
  return w.down * h;
}

std::vector<Vector> head_queries(const FastWeightConfig& cfg, const SlowParams& sp,
                                 const FramePacket& frame) {
  require(frame.tokens.rows() >= 1, "head_queries: empty token list");
  require(frame.width() == cfg.d_in, "head_queries: token width != d_in");
  const Vector q_full = sp.query_w * frame.pooled + sp.query_b;
  std::vector<Vector> qs(cfg.heads);
  for (int h = 0; h < cfg.heads; ++h) {
    Vector q = q_full.segment(static_cast<Eigen::Index>(h) * cfg.d_head, cfg.d_head);
    const double n = q.norm();
    if (n > 0.0) q /= n;  // zero-norm query stays zero
    qs[h] = std::move(q);
  }
  return qs;
}

Vector read_prior_from_queries(const FastWeightConfig& cfg, const FastWeights& fw,
                               const SlowParams& sp, const std::vector<Vector>& queries) {
  require(static_cast<int>(fw.heads.size()) == cfg.heads, "read_prior: head count mismatch");
  require(static_cast<int>(queries.size()) == cfg.heads, "read_prior: query count mismatch");
  Vector y(cfg.d_model);
  for (int h = 0; h < cfg.heads; ++h)
    y.segment(static_cast<Eigen::Index>(h) * cfg.d_head, cfg.d_head) =
        swiglu_forward(fw.heads[h], queries[h]);
  return sp.out_w * rms_norm(y, sp.readout_scale) + sp.out_b;
}

Vector read_prior(const FastWeightConfig& cfg, const FastWeights& fw, const SlowParams& sp,
                  const FramePacket& frame) {
  return read_prior_from_queries(cfg, fw, sp, head_queries(cfg, sp, frame));
}

double ttt_loss(const Vector& prior, const Vector& posterior) {
  require(prior.size() == posterior.size(), "ttt_loss: dimension mismatch");
  return prior.dot(posterior);
}

FastWeightGradients ttt_gradient(const FastWeightConfig& cfg, const FastWeights& fw,
                                 const std::vector<Vector>& queries, const Vector& posterior) {
  require(static_cast<int>(fw.heads.size()) == cfg.heads, "ttt_gradient: head count mismatch");
  require(static_cast<int>(queries.size()) == cfg.heads, "ttt_gradient: query count mismatch");
  require(posterior.size() == cfg.d_model, "ttt_gradient: posterior width != d_model");

  FastWeightGradients grads;
  grads.heads.resize(cfg.heads);
  for (int h = 0; h < cfg.heads; ++h) {
    const Vector& q = queries[h];
    require(q.size() == cfg.d_head, "ttt_gradient: query width != d_head");
    const auto& w = fw.heads[h];
    const Vector p = posterior.segment(static_cast<Eigen::Index>(h) * cfg.d_head, cfg.d_head);

    const Vector a = w.gate * q;
    const Vector g = w.up * q;
    Vector s(cfg.d_head), ds(cfg.d_head);
    for (int i = 0; i < cfg.d_head; ++i) {
      s(i) = silu(a(i));
      ds(i) = silu_grad(a(i));
    }
    const Vector hv = s.cwiseProduct(g);
    const Vector u = w.down.transpose() * p;

    auto& out = grads.heads[h];
    out.down = p * hv.transpose();
    out.gate = u.cwiseProduct(g).cwiseProduct(ds) * q.transpose();
    out.up = u.cwiseProduct(s) * q.transpose();
  }
  return grads;
}

namespace {

double alignment_objective(const FastWeightConfig& cfg, const FastWeights& fw,
                           const std::vector<Vector>& queries, const Vector& posterior) {
  double total = 0.0;
  for (int h = 0; h < cfg.heads; ++h) {
    const Vector p = posterior.segment(static_cast<Eigen::Index>(h) * cfg.d_head, cfg.d_head);
    total += swiglu_forward(fw.heads[h], queries[h]).dot(p);
  }
  return total;
}

}  // namespace

FastWeightGradients finite_diff_gradient(const FastWeightConfig& cfg, const FastWeights& fw,
                                         const std::vector<Vector>& queries,
                                         const Vector& posterior, double step) {
  require(step > 0.0, "finite_diff_gradient: step must be positive");
  FastWeightGradients grads = FastWeightGradients::zero(cfg);
  FastWeights probe = fw;
  for (int h = 0; h < cfg.heads; ++h) {
    Matrix SwigluWeights::*members[3] = {&SwigluWeights::gate, &SwigluWeights::down,
                                         &SwigluWeights::up};
    Matrix SwigluGrads::*gmembers[3] = {&SwigluGrads::gate, &SwigluGrads::down, &SwigluGrads::up};
    for (int m = 0; m < 3; ++m) {
      Matrix& w = probe.heads[h].*members[m];
      Matrix& g = grads.heads[h].*gmembers[m];
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        for (Eigen::Index c = 0; c < w.cols(); ++c) {
          const double saved = w(r, c);
          w(r, c) = saved + step;
          const double plus = alignment_objective(cfg, probe, queries, posterior);
          w(r, c) = saved - step;
          const double minus = alignment_objective(cfg, probe, queries, posterior);
          w(r, c) = saved;
          g(r, c) = (plus - minus) / (2.0 * step);
        }
      }
    }
  }
  return grads;
}

Vector predict_decay(const FastWeightConfig& cfg, const SlowParams& sp, const FramePacket& frame) {
  require(frame.tokens.rows() >= 1, "predict_decay: empty token list");
  require(frame.width() == cfg.d_in, "predict_decay: token width != d_in");
  const Vector raw = sp.decay_w * frame.pooled + sp.decay_b;
  Vector alpha(cfg.heads);
  for (int h = 0; h < cfg.heads; ++h) alpha(h) = 1.0 - cfg.gamma * sigmoid(raw(h));
  return alpha;
}

Matrix predict_lr(const FastWeightConfig& cfg, const SlowParams& sp, const FramePacket& frame) {
  require(frame.tokens.rows() >= 1, "predict_lr: empty token list");
  require(frame.width() == cfg.d_in, "predict_lr: token width != d_in");
  const Vector raw = sp.lr_w * frame.pooled + sp.lr_b;
  Matrix eta(3, cfg.heads);
  for (int i = 0; i < 3; ++i)
    for (int h = 0; h < cfg.heads; ++h)
      eta(i, h) = softplus(raw(static_cast<Eigen::Index>(i) * cfg.heads + h) + cfg.c_base);
  return eta;
}

FastWeights update_weights(const FastWeights& fw, const FastWeightGradients& grads,
                           const Vector& alpha, const Matrix& eta) {
  const int heads = static_cast<int>(fw.heads.size());
  require(static_cast<int>(grads.heads.size()) == heads, "update_weights: head count mismatch");
  require(alpha.size() == heads, "update_weights: alpha size mismatch");
  require(eta.rows() == 3 && eta.cols() == heads, "update_weights: eta shape mismatch");

  FastWeights out;
  out.heads.resize(heads);
  for (int h = 0; h < heads; ++h) {
    const auto& w = fw.heads[h];
    const auto& g = grads.heads[h];
    require(g.gate.rows() == w.gate.rows() && g.gate.cols() == w.gate.cols() &&
                g.down.rows() == w.down.rows() && g.down.cols() == w.down.cols() &&
                g.up.rows() == w.up.rows() && g.up.cols() == w.up.cols(),
            "update_weights: gradient shape mismatch");
    out.heads[h].gate = alpha(h) * w.gate + eta(0, h) * g.gate;
    out.heads[h].down = alpha(h) * w.down + eta(1, h) * g.down;
    out.heads[h].up = alpha(h) * w.up + eta(2, h) * g.up;
  }
  return out;
}

long long fast_weight_param_count(const FastWeightConfig& cfg) {
  cfg.validate();
  const long long d_in = cfg.d_in, d_model = cfg.d_model, heads = cfg.heads, d_head = cfg.d_head;
  long long n = 0;
  n += d_in * d_model + d_model;          // query projection
  n += heads * 3 * d_head * d_head;       // fast weights
  n += d_in * 3 * heads + 3 * heads;      // learning-rate head
  n += d_in * heads + heads;              // decay head
  n += d_model;                           // readout norm scale
  n += d_model * d_model + d_model;       // output projection
  return n;
}

double gradcheck_max_rel_error(int d_head, int heads, int instances, uint64_t seed, double step) {
  FastWeightConfig cfg;
  cfg.d_in = 2 * d_head * heads;
  cfg.d_model = d_head * heads;
  cfg.heads = heads;
  cfg.d_head = d_head;

  double worst = 0.0;
  for (int i = 0; i < instances; ++i) {
    const uint64_t s = derive_seed(seed, static_cast<uint64_t>(i));
    const FastWeights fw = FastWeights::random(cfg, s, 0.5);
    Rng rng(derive_seed(s, 1));
    std::vector<Vector> qs(cfg.heads);
    for (int h = 0; h < cfg.heads; ++h) {
      Vector q = gaussian_vector(rng, cfg.d_head, 1.0);
      q.normalize();
      qs[h] = std::move(q);
    }
    const Vector posterior = gaussian_vector(rng, cfg.d_model, 1.0);

    const FastWeightGradients analytic = ttt_gradient(cfg, fw, qs, posterior);
    const FastWeightGradients numeric = finite_diff_gradient(cfg, fw, qs, posterior, step);
    for (int h = 0; h < cfg.heads; ++h) {
      const auto rel = [](const Matrix& a, const Matrix& b) {
        const double denom = std::max(b.norm(), 1e-300);
        return (a - b).norm() / denom;
      };
      worst = std::max({worst, rel(analytic.heads[h].gate, numeric.heads[h].gate),
                        rel(analytic.heads[h].down, numeric.heads[h].down),
                        rel(analytic.heads[h].up, numeric.heads[h].up)});
    }
  }
  return worst;
}

}  // namespace dualmem
