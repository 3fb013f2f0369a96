#include "dualmem/decoder.hpp"

namespace dualmem {

namespace {

// Output projections are initialized small so residual branch contributions
// stay an order of magnitude below the streams they feed. Combined with the
// pre-projection row normalization this keeps the closed recurrent loop
// bounded over arbitrarily long streams.
constexpr double kOutputGain = 0.02;

// Row-wise RMS normalization applied inside each residual branch. Zero rows
// stay zero, so the zero-weight decoder remains an exact identity.
Matrix rms_rows(const Matrix& m) {
  Matrix out = m;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double ms = m.row(i).squaredNorm() / static_cast<double>(m.cols());
    out.row(i) /= std::sqrt(ms + 1e-12);
  }
  return out;
}

}  // namespace

SurrogateDecoder::SurrogateDecoder(const DecoderConfig& cfg, int d_pose, int d_frame, int d_state,
                                   bool zero_init)
    : cfg_(cfg), d_pose_(d_pose), d_frame_(d_frame), d_state_(d_state) {
  cfg_.validate();
  require(d_pose > 0 && d_frame > 0 && d_state > 0, "SurrogateDecoder: dims must be positive");

  Rng rng(derive_seed(cfg.seed, 0xdecULL));
  const int L = cfg_.d_model;
  auto mat = [&](int rows, int cols) -> Matrix {
    if (zero_init) return Matrix::Zero(rows, cols);
    return gaussian_matrix(rng, rows, cols, 1.0 / std::sqrt(static_cast<double>(rows)));
  };
  auto out_mat = [&](int rows, int cols) -> Matrix {
    if (zero_init) return Matrix::Zero(rows, cols);
    return gaussian_matrix(rng, rows, cols, kOutputGain / std::sqrt(static_cast<double>(rows)));
  };

  blocks_.resize(static_cast<size_t>(cfg_.depth));
  for (auto& b : blocks_) {
    b.s_q = mat(d_state, L);
    b.s_kp = mat(d_pose, L);
    b.s_kf = mat(d_frame, L);
    b.s_vp = mat(d_pose, L);
    b.s_vf = mat(d_frame, L);
    b.s_o = out_mat(L, d_state);
    b.f_q = mat(d_frame, L);
    b.f_k = mat(d_state, L);
    b.f_v = mat(d_state, L);
    b.f_o = out_mat(L, d_frame);
    b.p_q = mat(d_pose, L);
    b.p_ks = mat(d_state, L);
    b.p_kf = mat(d_frame, L);
    b.p_vs = mat(d_state, L);
    b.p_vf = mat(d_frame, L);
    b.p_o = out_mat(L, d_pose);
  }
}

// Rows of q attend over rows of k/v. Heads are column blocks of the latent.
Matrix SurrogateDecoder::multihead(const Matrix& q, const Matrix& k, const Matrix& v) const {
  const int L = cfg_.d_model;
  const int H = cfg_.heads;
  const int dh = L / H;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix out(q.rows(), L);
  for (int h = 0; h < H; ++h) {
    const auto qh = q.middleCols(static_cast<Eigen::Index>(h) * dh, dh);
    const auto kh = k.middleCols(static_cast<Eigen::Index>(h) * dh, dh);
    const auto vh = v.middleCols(static_cast<Eigen::Index>(h) * dh, dh);
    Matrix scores = qh * kh.transpose() * inv_sqrt;
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
      const double peak = scores.row(r).maxCoeff();
      Eigen::RowVectorXd e = (scores.row(r).array() - peak).exp();
      scores.row(r) = e / e.sum();
    }
    out.middleCols(static_cast<Eigen::Index>(h) * dh, dh) = scores * vh;
  }
  return out;
}

DecodeResult SurrogateDecoder::decode(const Vector& prior_pose, const FramePacket& frame,
                                      const StateTokens& s_prev) const {
  require(prior_pose.size() == d_pose_, "decode: prior pose width mismatch");
  require(frame.width() == d_frame_, "decode: frame token width mismatch");
  require(s_prev.cols() == d_state_, "decode: state channel width mismatch");
  require(frame.tokens.rows() >= 1, "decode: empty token list");

  Matrix pose = prior_pose.transpose();  // 1 x d_pose
  Matrix tokens = frame.tokens;          // T x d_frame
  Matrix state = s_prev.tokens;          // N_s x d_state

  for (const auto& b : blocks_) {
    const Matrix pose_n = rms_rows(pose);
    const Matrix tokens_n = rms_rows(tokens);
    const Matrix state_n = rms_rows(state);

    // keys/values over the union of pose and frame rows
    Matrix ctx_k(1 + tokens.rows(), cfg_.d_model);
    Matrix ctx_v(1 + tokens.rows(), cfg_.d_model);
    ctx_k.row(0) = pose_n * b.s_kp;
    ctx_k.bottomRows(tokens.rows()) = tokens_n * b.s_kf;
    ctx_v.row(0) = pose_n * b.s_vp;
    ctx_v.bottomRows(tokens.rows()) = tokens_n * b.s_vf;
    const Matrix d_state_rows = multihead(state_n * b.s_q, ctx_k, ctx_v) * b.s_o;

    const Matrix d_tokens =
        multihead(tokens_n * b.f_q, state_n * b.f_k, state_n * b.f_v) * b.f_o;

    Matrix pctx_k(state.rows() + tokens.rows(), cfg_.d_model);
    Matrix pctx_v(state.rows() + tokens.rows(), cfg_.d_model);
    pctx_k.topRows(state.rows()) = state_n * b.p_ks;
    pctx_k.bottomRows(tokens.rows()) = tokens_n * b.p_kf;
    pctx_v.topRows(state.rows()) = state_n * b.p_vs;
    pctx_v.bottomRows(tokens.rows()) = tokens_n * b.p_vf;
    const Matrix d_pose_row = multihead(pose_n * b.p_q, pctx_k, pctx_v) * b.p_o;

    // parallel residual update of all three streams
    state += d_state_rows;
    tokens += d_tokens;
    pose += d_pose_row;
  }

  DecodeResult out;
  out.posterior_pose = pose.row(0).transpose();
  out.refined_tokens = std::move(tokens);
  out.candidate_state.tokens = std::move(state);
  return out;
}

}  // namespace dualmem
