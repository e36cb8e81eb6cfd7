#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ebridge/linalg.hpp"

namespace ebridge {

// Standard normals from mt19937_64 through an explicit Box-Muller transform on
// 53-bit uniforms. Everything downstream of the seed is spelled out here, so a
// given platform reproduces streams bit-for-bit; Monte Carlo path p uses seed
// base_seed + p (mt19937_64's initialization scrambles nearby seeds).
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
    const double u2 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;          // [0,1)
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Wiener increments dW_i ~ N(0, dt I_m) for one path on a uniform grid of k steps.
class NoisePath {
 public:
  NoisePath(std::uint64_t seed, int k, double dt, int input_dim);

  std::uint64_t seed() const { return seed_; }
  int steps() const { return static_cast<int>(increments_.size()); }
  double dt() const { return dt_; }
  int input_dim() const { return increments_.empty() ? 0 : static_cast<int>(increments_[0].size()); }
  const Vector& increment(int i) const { return increments_.at(i); }
  Vector& increment(int i) { return increments_.at(i); }

 private:
  std::uint64_t seed_;
  double dt_;
  std::vector<Vector> increments_;
};

}  // namespace ebridge
