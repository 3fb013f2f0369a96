// Implicit pose memory: per-head SwiGLU fast weights, the online alignment
// objective with analytic gradients, and the input-conditioned decay /
// learning-rate predictors that drive the per-frame weight update.
#pragma once

#include "dualmem/common.hpp"
#include "dualmem/frame.hpp"

#include <cstdint>
#include <vector>

namespace dualmem {

struct FastWeightConfig {
  int d_in = 1024;     // visual token width
  int d_model = 768;   // latent pose width
  int heads = 12;
  int d_head = 64;
  double gamma = 0.01;    // decay scale
  double c_base = 0.001;  // base learning-rate constant

  void validate() const;
};

// One head's memory: y = down * (silu(gate * x) .* (up * x)), all d_head x d_head.
struct SwigluWeights {
  Matrix gate, down, up;
};

struct FastWeights {
  std::vector<SwigluWeights> heads;

  static FastWeights zero(const FastWeightConfig& cfg);
  static FastWeights random(const FastWeightConfig& cfg, uint64_t seed, double stddev = 0.02);

  Eigen::Index entry_count() const;
};

struct SwigluGrads {
  Matrix gate, down, up;
};

struct FastWeightGradients {
  std::vector<SwigluGrads> heads;

  static FastWeightGradients zero(const FastWeightConfig& cfg);
};

// Slow (fixed) parameters around the fast weights: query projection, the two
// update predictors, and the readout norm + projection.
struct SlowParams {
  Matrix query_w;        // d_model x d_in
  Vector query_b;        // d_model
  Matrix lr_w;           // 3*heads x d_in
  Vector lr_b;           // 3*heads
  Matrix decay_w;        // heads x d_in
  Vector decay_b;        // heads
  Vector readout_scale;  // d_model, RMSNorm scale
  Matrix out_w;          // d_model x d_model
  Vector out_b;          // d_model

  // Fan-in-scaled Gaussian for the projections; lr/decay heads start at zero
  // so the first step uses alpha = 1 - gamma/2 and eta = softplus(c_base).
  static SlowParams init(const FastWeightConfig& cfg, uint64_t seed);

  Eigen::Index entry_count() const;
};

Vector swiglu_forward(const SwigluWeights& w, const Vector& x);

// Per-head L2-normalized queries derived from the pooled frame feature.
// A zero-norm head query stays the zero vector.
std::vector<Vector> head_queries(const FastWeightConfig& cfg, const SlowParams& sp,
                                 const FramePacket& frame);

// Pose prior read: pool -> query_proj -> head split + normalize -> swiglu per
// head -> concat -> rms_norm -> out_proj.
Vector read_prior(const FastWeightConfig& cfg, const FastWeights& fw, const SlowParams& sp,
                  const FramePacket& frame);

// Same readout from already-computed head queries.
Vector read_prior_from_queries(const FastWeightConfig& cfg, const FastWeights& fw,
                               const SlowParams& sp, const std::vector<Vector>& queries);

double ttt_loss(const Vector& prior, const Vector& posterior);

// Analytic gradient of sum_h <swiglu_h(q_h), p_h> with the posterior held
// constant. Gradients live on the pre-normalization readout branch.
FastWeightGradients ttt_gradient(const FastWeightConfig& cfg, const FastWeights& fw,
                                 const std::vector<Vector>& queries, const Vector& posterior);

// Central-difference oracle for ttt_gradient.
FastWeightGradients finite_diff_gradient(const FastWeightConfig& cfg, const FastWeights& fw,
                                         const std::vector<Vector>& queries,
                                         const Vector& posterior, double step);

// Retention factors, one per head, each strictly inside (1-gamma, 1).
Vector predict_decay(const FastWeightConfig& cfg, const SlowParams& sp, const FramePacket& frame);

// Learning rates, 3 x heads; row order (gate, down, up). Strictly positive.
Matrix predict_lr(const FastWeightConfig& cfg, const SlowParams& sp, const FramePacket& frame);

// W_i^h <- alpha[h] * W_i^h + eta(i, h) * G_i^h
FastWeights update_weights(const FastWeights& fw, const FastWeightGradients& grads,
                           const Vector& alpha, const Matrix& eta);

// Exact entry count of SlowParams plus FastWeights at the given dims.
long long fast_weight_param_count(const FastWeightConfig& cfg);

// Largest relative Frobenius error between analytic and finite-difference
// gradients over `instances` seeded random cases at the given head width.
double gradcheck_max_rel_error(int d_head, int heads, int instances, uint64_t seed,
                               double step = 1e-5);

}  // namespace dualmem
