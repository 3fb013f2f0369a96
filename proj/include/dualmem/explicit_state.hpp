// Explicit geometric memory: a fixed grid of state tokens, the channel-wise
// update gate, gated integration of candidate states, and the plug-in
// per-token gate slot.
#pragma once

#include "dualmem/common.hpp"
#include "dualmem/frame.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>

namespace dualmem {

struct StateTokens {
  Matrix tokens;  // N_s x C

  static StateTokens zero(int n_state, int c_state);
  static StateTokens random(int n_state, int c_state, uint64_t seed, double stddev = 0.02);

  Eigen::Index rows() const { return tokens.rows(); }
  Eigen::Index cols() const { return tokens.cols(); }
};

// Two-layer bottleneck MLP producing the per-channel gate:
// sigma(layer2(gelu(layer1(concat(state_token, pooled_frame))))).
struct GateParams {
  Matrix w1;  // bottleneck x (C + d_in)
  Vector b1;  // bottleneck
  Matrix w2;  // C x bottleneck
  Vector b2;  // C

  static GateParams zero(int c_state, int d_in, int bottleneck);
  static GateParams random(int c_state, int d_in, int bottleneck, uint64_t seed);

  Eigen::Index entry_count() const;
};

// Per-token multipliers from an external update strategy. Non-negative and
// finite; values above 1 are allowed.
struct TokenGate {
  Vector g;  // N_s
};

// Plug-in slot for per-token update strategies. The engine only depends on
// the (s_prev, s_cand) -> TokenGate contract.
struct GateStrategy {
  enum class Kind { Constant, Overwrite, Similarity };
  Kind kind = Kind::Overwrite;
  double constant_value = 1.0;  // Constant
  double temperature = 1.0;     // Similarity

  static GateStrategy constant(double g0) { return {Kind::Constant, g0, 1.0}; }
  static GateStrategy overwrite() { return {Kind::Overwrite, 1.0, 1.0}; }
  static GateStrategy similarity(double tau) { return {Kind::Similarity, 1.0, tau}; }
};

// Channel-wise gate, entries strictly in (0,1).
Matrix compute_gate(const GateParams& gp, const FramePacket& frame, const StateTokens& s_prev);

// S_t = zeta .* S_cand + (1 - zeta) .* S_prev
StateTokens gated_update(const StateTokens& s_prev, const StateTokens& s_cand, const Matrix& zeta);

// Per token i: S_t[i] = g[i] * (zeta[i] .* S_cand[i] + (1 - zeta[i]) .* S_prev[i]).
// The token gate multiplies both terms.
StateTokens gated_update_with_token_gate(const StateTokens& s_prev, const StateTokens& s_cand,
                                         const Matrix& zeta, const TokenGate& g);

TokenGate apply_strategy(const GateStrategy& strategy, const StateTokens& s_prev,
                         const StateTokens& s_cand);

long long gate_param_count(int c_state, int d_in, int bottleneck);

// Flat binary snapshot: uint64 N_s, uint64 C, then row-major doubles.
void write_state_tokens(std::ostream& os, const StateTokens& st);
StateTokens read_state_tokens(std::istream& is);
void save_state_tokens(const std::string& path, const StateTokens& st);
StateTokens load_state_tokens(const std::string& path);

}  // namespace dualmem
