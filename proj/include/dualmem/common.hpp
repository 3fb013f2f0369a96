// Shared scalar math, RNG, and error types used across the engine.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace dualmem {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Violated operation precondition or shape contract. CLI maps this to exit 1.
struct ContractError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Filesystem / parse failure. CLI maps this to exit 2.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractError(msg);
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double silu(double x) { return x * sigmoid(x); }

// d/dx silu(x) = sigma(x) * (1 + x * (1 - sigma(x)))
inline double silu_grad(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

inline double softplus(double x) {
  // max(x,0) + log1p(exp(-|x|)) avoids overflow on both tails
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline double gelu(double x) {
  return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2));
}

// RMSNorm with learned elementwise scale: v_i * scale_i / sqrt(mean(v^2) + eps).
// rms_norm(0) == 0 for any eps > 0.
inline Vector rms_norm(const Vector& v, const Vector& scale, double eps = 1e-12) {
  require(v.size() == scale.size(), "rms_norm: scale width mismatch");
  const double ms = v.squaredNorm() / static_cast<double>(v.size());
  return (v.array() * scale.array() / std::sqrt(ms + eps)).matrix();
}

// Deterministic RNG. Gaussians come from an explicit Box-Muller transform on
// raw 53-bit uniforms so streams are reproducible independent of the standard
// library's distribution internals.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  // [0, 1)
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // [lo, hi] inclusive
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(gen_() % static_cast<uint64_t>(hi - lo + 1));
  }

  uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline Matrix gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double stddev) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal(0.0, stddev);
  return m;
}

inline Vector gaussian_vector(Rng& rng, Eigen::Index n, double stddev) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal(0.0, stddev);
  return v;
}

// Stable sub-seed derivation (splitmix64 step on seed ^ stream tag).
inline uint64_t derive_seed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace dualmem
