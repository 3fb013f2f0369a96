#include "dualmem/explicit_state.hpp"

#include <cstring>
#include <fstream>

namespace dualmem {

StateTokens StateTokens::zero(int n_state, int c_state) {
  require(n_state > 0 && c_state > 0, "StateTokens: dims must be positive");
  return {Matrix::Zero(n_state, c_state)};
}

StateTokens StateTokens::random(int n_state, int c_state, uint64_t seed, double stddev) {
  require(n_state > 0 && c_state > 0, "StateTokens: dims must be positive");
  Rng rng(seed);
  return {gaussian_matrix(rng, n_state, c_state, stddev)};
}

GateParams GateParams::zero(int c_state, int d_in, int bottleneck) {
  require(c_state > 0 && d_in > 0 && bottleneck > 0, "GateParams: dims must be positive");
  GateParams gp;
  gp.w1 = Matrix::Zero(bottleneck, c_state + d_in);
  gp.b1 = Vector::Zero(bottleneck);
  gp.w2 = Matrix::Zero(c_state, bottleneck);
  gp.b2 = Vector::Zero(c_state);
  return gp;
}

GateParams GateParams::random(int c_state, int d_in, int bottleneck, uint64_t seed) {
  require(c_state > 0 && d_in > 0 && bottleneck > 0, "GateParams: dims must be positive");
  Rng rng(seed);
  GateParams gp;
  gp.w1 = gaussian_matrix(rng, bottleneck, c_state + d_in, 1.0 / std::sqrt(c_state + d_in));
  gp.b1 = Vector::Zero(bottleneck);
  gp.w2 = gaussian_matrix(rng, c_state, bottleneck, 1.0 / std::sqrt(bottleneck));
  gp.b2 = Vector::Zero(c_state);
  return gp;
}

Eigen::Index GateParams::entry_count() const {
  return w1.size() + b1.size() + w2.size() + b2.size();
}

Matrix compute_gate(const GateParams& gp, const FramePacket& frame, const StateTokens& s_prev) {
  require(frame.tokens.rows() >= 1, "compute_gate: empty token list");
  const Eigen::Index c = s_prev.cols();
  const Eigen::Index d_in = frame.width();
  require(gp.w1.cols() == c + d_in, "compute_gate: concatenated input width mismatch");
  require(gp.w2.rows() == c, "compute_gate: output width != channel count");

  Matrix zeta(s_prev.rows(), c);
  Vector input(c + d_in);
  input.tail(d_in) = frame.pooled;
  for (Eigen::Index i = 0; i < s_prev.rows(); ++i) {
    input.head(c) = s_prev.tokens.row(i).transpose();
    Vector hidden = gp.w1 * input + gp.b1;
    for (Eigen::Index j = 0; j < hidden.size(); ++j) hidden(j) = gelu(hidden(j));
    const Vector raw = gp.w2 * hidden + gp.b2;
    for (Eigen::Index j = 0; j < c; ++j) zeta(i, j) = sigmoid(raw(j));
  }
  return zeta;
}

StateTokens gated_update(const StateTokens& s_prev, const StateTokens& s_cand,
                         const Matrix& zeta) {
  require(s_prev.rows() == s_cand.rows() && s_prev.cols() == s_cand.cols(),
          "gated_update: state shape mismatch");
  require(zeta.rows() == s_prev.rows() && zeta.cols() == s_prev.cols(),
          "gated_update: gate shape mismatch");
  StateTokens out;
  out.tokens = zeta.cwiseProduct(s_cand.tokens) +
               (Matrix::Ones(zeta.rows(), zeta.cols()) - zeta).cwiseProduct(s_prev.tokens);
  return out;
}

StateTokens gated_update_with_token_gate(const StateTokens& s_prev, const StateTokens& s_cand,
                                         const Matrix& zeta, const TokenGate& g) {
  require(g.g.size() == s_prev.rows(), "gated_update_with_token_gate: token gate length mismatch");
  StateTokens out = gated_update(s_prev, s_cand, zeta);
  out.tokens = g.g.asDiagonal() * out.tokens;
  return out;
}

TokenGate apply_strategy(const GateStrategy& strategy, const StateTokens& s_prev,
                         const StateTokens& s_cand) {
  require(s_prev.rows() == s_cand.rows() && s_prev.cols() == s_cand.cols(),
          "apply_strategy: state shape mismatch");
  TokenGate tg;
  switch (strategy.kind) {
    case GateStrategy::Kind::Constant:
      require(strategy.constant_value >= 0.0 && std::isfinite(strategy.constant_value),
              "apply_strategy: constant gate must be non-negative and finite");
      tg.g = Vector::Constant(s_prev.rows(), strategy.constant_value);
      break;
    case GateStrategy::Kind::Overwrite:
      tg.g = Vector::Ones(s_prev.rows());
      break;
    case GateStrategy::Kind::Similarity: {
      tg.g = Vector(s_prev.rows());
      for (Eigen::Index i = 0; i < s_prev.rows(); ++i) {
        const double np = s_prev.tokens.row(i).norm();
        const double nc = s_cand.tokens.row(i).norm();
        if (np == 0.0 || nc == 0.0) {
          tg.g(i) = 0.5;  // neutral gate for degenerate tokens
        } else {
          const double cos = s_prev.tokens.row(i).dot(s_cand.tokens.row(i)) / (np * nc);
          tg.g(i) = sigmoid(cos / strategy.temperature);
        }
      }
      break;
    }
  }
  return tg;
}

long long gate_param_count(int c_state, int d_in, int bottleneck) {
  require(c_state > 0 && d_in > 0 && bottleneck > 0, "gate_param_count: dims must be positive");
  const long long c = c_state, d = d_in, b = bottleneck;
  return (c + d) * b + b + b * c + c;
}

void write_state_tokens(std::ostream& os, const StateTokens& st) {
  const uint64_t rows = static_cast<uint64_t>(st.rows());
  const uint64_t cols = static_cast<uint64_t>(st.cols());
  os.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  os.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  for (Eigen::Index i = 0; i < st.rows(); ++i)
    for (Eigen::Index j = 0; j < st.cols(); ++j) {
      const double v = st.tokens(i, j);
      os.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  if (!os) throw IoError("write_state_tokens: stream write failed");
}

StateTokens read_state_tokens(std::istream& is) {
  uint64_t rows = 0, cols = 0;
  is.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  is.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  if (!is || rows == 0 || cols == 0) throw IoError("read_state_tokens: bad header");
  StateTokens st;
  st.tokens.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < st.rows(); ++i)
    for (Eigen::Index j = 0; j < st.cols(); ++j) {
      double v = 0.0;
      is.read(reinterpret_cast<char*>(&v), sizeof(v));
      st.tokens(i, j) = v;
    }
  if (!is) throw IoError("read_state_tokens: truncated payload");
  return st;
}

void save_state_tokens(const std::string& path, const StateTokens& st) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("save_state_tokens: cannot open " + path);
  write_state_tokens(f, st);
}

StateTokens load_state_tokens(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("load_state_tokens: cannot open " + path);
  return read_state_tokens(f);
}

}  // namespace dualmem
