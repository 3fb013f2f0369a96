#include "dualmem/explicit_state.hpp"

#include <doctest.h>

#include <cstdio>
#include <string>

using namespace dualmem;

namespace {

double gelu_ref(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

FramePacket frame_of(const Matrix& tokens) { return FramePacket::from_tokens(tokens); }

}  // namespace

TEST_CASE("compute_gate: zero parameters give 0.5 everywhere") {
  const GateParams gp = GateParams::zero(6, 8, 4);
  Rng rng(1);
  const StateTokens s = StateTokens::random(5, 6, 2);
  const Matrix zeta = compute_gate(gp, frame_of(gaussian_matrix(rng, 3, 8, 1.0)), s);
  CHECK(zeta.rows() == 5);
  CHECK(zeta.cols() == 6);
  CHECK((zeta.array() == 0.5).all());
}

TEST_CASE("compute_gate: saturated output approaches 0 and 1") {
  GateParams gp = GateParams::zero(4, 6, 3);
  Rng rng(2);
  const StateTokens s = StateTokens::random(3, 4, 3);
  const FramePacket frame = frame_of(gaussian_matrix(rng, 2, 6, 1.0));

  gp.b2.setConstant(50.0);
  CHECK(compute_gate(gp, frame, s).minCoeff() == doctest::Approx(1.0).epsilon(1e-12));
  gp.b2.setConstant(-50.0);
  CHECK(compute_gate(gp, frame, s).maxCoeff() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("compute_gate: matches a staged scalar composition") {
  const int n_s = 4, c = 6, d_in = 8, bottleneck = 5;
  const GateParams gp = GateParams::random(c, d_in, bottleneck, 77);
  const StateTokens s = StateTokens::random(n_s, c, 78);
  Rng rng(79);
  const FramePacket frame = frame_of(gaussian_matrix(rng, 3, d_in, 1.0));

  const Matrix zeta = compute_gate(gp, frame, s);
  for (int i = 0; i < n_s; ++i) {
    std::vector<double> input(static_cast<size_t>(c + d_in));
    for (int j = 0; j < c; ++j) input[static_cast<size_t>(j)] = s.tokens(i, j);
    for (int j = 0; j < d_in; ++j) input[static_cast<size_t>(c + j)] = frame.pooled(j);
    std::vector<double> hidden(static_cast<size_t>(bottleneck));
    for (int r = 0; r < bottleneck; ++r) {
      double v = gp.b1(r);
      for (int j = 0; j < c + d_in; ++j) v += gp.w1(r, j) * input[static_cast<size_t>(j)];
      hidden[static_cast<size_t>(r)] = gelu_ref(v);
    }
    for (int j = 0; j < c; ++j) {
      double v = gp.b2(j);
      for (int r = 0; r < bottleneck; ++r) v += gp.w2(j, r) * hidden[static_cast<size_t>(r)];
      const double expect = 1.0 / (1.0 + std::exp(-v));
      CHECK(zeta(i, j) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("compute_gate: width mismatch throws") {
  const GateParams gp = GateParams::zero(6, 8, 4);
  Rng rng(3);
  const StateTokens s = StateTokens::random(5, 6, 2);
  CHECK_THROWS_AS(compute_gate(gp, frame_of(gaussian_matrix(rng, 3, 9, 1.0)), s), ContractError);
}

TEST_CASE("gated_update: overwrite, freeze and midpoint limits") {
  const StateTokens prev = StateTokens::random(4, 5, 10);
  const StateTokens cand = StateTokens::random(4, 5, 11);

  const StateTokens all_new = gated_update(prev, cand, Matrix::Ones(4, 5));
  CHECK(all_new.tokens == cand.tokens);
  const StateTokens frozen = gated_update(prev, cand, Matrix::Zero(4, 5));
  CHECK(frozen.tokens == prev.tokens);
  const StateTokens mid = gated_update(prev, cand, Matrix::Constant(4, 5, 0.5));
  CHECK((mid.tokens - 0.5 * (prev.tokens + cand.tokens)).lpNorm<Eigen::Infinity>() <= 1e-15);

  CHECK_THROWS_AS(gated_update(prev, cand, Matrix::Zero(4, 4)), ContractError);
  CHECK_THROWS_AS(gated_update(prev, StateTokens::random(5, 5, 12), Matrix::Zero(4, 5)),
                  ContractError);
}

TEST_CASE("gated_update: convex combination stays inside the entrywise envelope") {
  Rng rng(20);
  const StateTokens prev = StateTokens::random(6, 7, 21);
  const StateTokens cand = StateTokens::random(6, 7, 22);
  Matrix zeta(6, 7);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 7; ++j) zeta(i, j) = rng.uniform();
  const StateTokens out = gated_update(prev, cand, zeta);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 7; ++j) {
      CHECK(out.tokens(i, j) >= std::min(prev.tokens(i, j), cand.tokens(i, j)));
      CHECK(out.tokens(i, j) <= std::max(prev.tokens(i, j), cand.tokens(i, j)));
    }
}

TEST_CASE("gated_update_with_token_gate: reductions and rescaling") {
  const StateTokens prev = StateTokens::random(4, 5, 30);
  const StateTokens cand = StateTokens::random(4, 5, 31);
  Rng rng(32);
  Matrix zeta(4, 5);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 5; ++j) zeta(i, j) = rng.uniform();

  // all-ones token gate reduces to the base rule bit-for-bit
  TokenGate ones{Vector::Ones(4)};
  CHECK(gated_update_with_token_gate(prev, cand, zeta, ones).tokens ==
        gated_update(prev, cand, zeta).tokens);

  // zero gate annihilates that token
  TokenGate partial{Vector::Ones(4)};
  partial.g(2) = 0.0;
  const StateTokens out = gated_update_with_token_gate(prev, cand, zeta, partial);
  CHECK(out.tokens.row(2).isZero(0.0));

  // gate of 2 with zeta = 0 rescales the retained state
  TokenGate twice{Vector::Constant(4, 2.0)};
  const StateTokens doubled = gated_update_with_token_gate(prev, cand, Matrix::Zero(4, 5), twice);
  CHECK((doubled.tokens - 2.0 * prev.tokens).lpNorm<Eigen::Infinity>() <= 1e-15);

  TokenGate wrong{Vector::Ones(3)};
  CHECK_THROWS_AS(gated_update_with_token_gate(prev, cand, zeta, wrong), ContractError);
}

TEST_CASE("freeze: zero gate over many steps leaves the state bit-identical") {
  const StateTokens initial = StateTokens::random(5, 6, 40);
  StateTokens s = initial;
  const TokenGate ones{Vector::Ones(5)};
  for (int t = 0; t < 16; ++t) {
    const StateTokens cand = StateTokens::random(5, 6, 41 + static_cast<uint64_t>(t));
    s = gated_update_with_token_gate(s, cand, Matrix::Zero(5, 6), ones);
  }
  CHECK(s.tokens == initial.tokens);
}

TEST_CASE("gate range: strictly inside (0,1) for random finite inputs") {
  Rng rng(50);
  for (int trial = 0; trial < 50; ++trial) {
    const GateParams gp = GateParams::random(6, 8, 4, rng.raw());
    const StateTokens s = StateTokens::random(8, 6, rng.raw());
    const Matrix zeta = compute_gate(gp, frame_of(gaussian_matrix(rng, 2, 8, 2.0)), s);
    CHECK(zeta.minCoeff() > 0.0);
    CHECK(zeta.maxCoeff() < 1.0);
  }
}

TEST_CASE("gate_param_count: defaults and degenerate dims") {
  CHECK(gate_param_count(768, 1024, 384) == 984192);
  CHECK(gate_param_count(768, 1024, 1) == 3329);
  CHECK(gate_param_count(1, 1, 1) == 5);
  CHECK(GateParams::random(768, 1024, 384, 1).entry_count() == 984192);
  CHECK_THROWS_AS(gate_param_count(0, 1, 1), ContractError);
}

TEST_CASE("apply_strategy: overwrite, constant and similarity variants") {
  const StateTokens prev = StateTokens::random(4, 6, 60);
  const StateTokens cand = StateTokens::random(4, 6, 61);

  CHECK(apply_strategy(GateStrategy::overwrite(), prev, cand).g == Vector::Ones(4));
  CHECK(apply_strategy(GateStrategy::constant(0.3), prev, cand).g == Vector::Constant(4, 0.3));

  const double tau = 0.7;
  const TokenGate self = apply_strategy(GateStrategy::similarity(tau), prev, prev);
  const double expect = 1.0 / (1.0 + std::exp(-1.0 / tau));
  for (int i = 0; i < 4; ++i) CHECK(self.g(i) == doctest::Approx(expect).epsilon(1e-12));

  StateTokens degenerate = prev;
  degenerate.tokens.row(1).setZero();
  const TokenGate g = apply_strategy(GateStrategy::similarity(tau), degenerate, cand);
  CHECK(g.g(1) == 0.5);

  CHECK_THROWS_AS(apply_strategy(GateStrategy::constant(-0.1), prev, cand), ContractError);
}

TEST_CASE("state snapshot: binary round trip") {
  const StateTokens s = StateTokens::random(7, 9, 70);
  const std::string path = "state_roundtrip.bin";
  save_state_tokens(path, s);
  const StateTokens back = load_state_tokens(path);
  CHECK(back.tokens == s.tokens);
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_state_tokens("does_not_exist.bin"), IoError);
}
