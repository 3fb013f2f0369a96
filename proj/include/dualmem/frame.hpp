// Per-frame input packet: visual tokens plus their cached mean.
#pragma once

#include "dualmem/common.hpp"

namespace dualmem {

struct FramePacket {
  Matrix tokens;   // T_tok x d_in
  Vector pooled;   // mean over token rows, cached
  int frame_index = 0;
  bool is_raymap = false;

  static FramePacket from_tokens(Matrix tokens, int frame_index = 0, bool is_raymap = false) {
    require(tokens.rows() >= 1, "FramePacket: needs at least one token");
    FramePacket p;
    p.pooled = tokens.colwise().mean();
    p.tokens = std::move(tokens);
    p.frame_index = frame_index;
    p.is_raymap = is_raymap;
    return p;
  }

  Eigen::Index token_count() const { return tokens.rows(); }
  Eigen::Index width() const { return tokens.cols(); }

  // pooled must equal the arithmetic mean of token rows to 1e-12
  void validate() const {
    require(tokens.rows() >= 1, "FramePacket: empty token list");
    require(pooled.size() == tokens.cols(), "FramePacket: pooled width mismatch");
    const Vector mean = tokens.colwise().mean();
    require((mean - pooled).lpNorm<Eigen::Infinity>() <= 1e-12,
            "FramePacket: pooled is not the token mean");
  }
};

}  // namespace dualmem
