#include "ebridge/noise.hpp"

#include <cmath>

#include "ebridge/error.hpp"

namespace ebridge {

NoisePath::NoisePath(std::uint64_t seed, int k, double dt, int input_dim) : seed_(seed), dt_(dt) {
  if (k < 1) fail(ErrorCode::invalid_input, "noise path: k must be >= 1");
  if (!(dt > 0.0)) fail(ErrorCode::invalid_input, "noise path: dt must be > 0");
  if (input_dim < 1) fail(ErrorCode::invalid_input, "noise path: input_dim must be >= 1");
  GaussianStream stream(seed);
  const double scale = std::sqrt(dt);
  increments_.resize(k);
  for (int i = 0; i < k; ++i) {
    Vector dw(input_dim);
    for (int c = 0; c < input_dim; ++c) dw(c) = scale * stream.next();
    increments_[i] = std::move(dw);
  }
}

}  // namespace ebridge
