// Surrogate interaction decoder. Stands in for the pretrained transformer
// decoders: depth-configurable bidirectional cross-attention blocks with
// residual connections over three streams (pose token, frame tokens, state
// tokens). With all weights zero the decoder is an exact identity on every
// stream; no positional terms, so frame-token permutations commute with it.
#pragma once

#include "dualmem/common.hpp"
#include "dualmem/explicit_state.hpp"
#include "dualmem/frame.hpp"

#include <cstdint>
#include <vector>

namespace dualmem {

struct DecoderConfig {
  int depth = 2;    // interaction blocks
  int d_model = 32; // shared attention latent width
  int heads = 4;    // attention heads (must divide d_model)
  uint64_t seed = 0;

  void validate() const {
    require(depth >= 1, "DecoderConfig: depth must be >= 1");
    require(d_model > 0 && heads > 0, "DecoderConfig: dims must be positive");
    require(d_model % heads == 0, "DecoderConfig: heads must divide d_model");
  }
};

struct DecodeResult {
  Vector posterior_pose;   // d_pose
  Matrix refined_tokens;   // same shape as the input frame tokens
  StateTokens candidate_state;
};

class SurrogateDecoder {
 public:
  // Stream widths: pose token d_pose, frame tokens d_frame, state tokens d_state.
  SurrogateDecoder(const DecoderConfig& cfg, int d_pose, int d_frame, int d_state,
                   bool zero_init = false);

  DecodeResult decode(const Vector& prior_pose, const FramePacket& frame,
                      const StateTokens& s_prev) const;

  const DecoderConfig& config() const { return cfg_; }

 private:
  struct Block {
    // state stream attends to [pose; frame]
    Matrix s_q, s_kp, s_kf, s_vp, s_vf, s_o;
    // frame stream attends to state
    Matrix f_q, f_k, f_v, f_o;
    // pose stream attends to [state; frame]
    Matrix p_q, p_ks, p_kf, p_vs, p_vf, p_o;
  };

  DecoderConfig cfg_;
  int d_pose_, d_frame_, d_state_;
  std::vector<Block> blocks_;

  Matrix multihead(const Matrix& q, const Matrix& k, const Matrix& v) const;
};

}  // namespace dualmem
