#pragma once

#include <memory>

#include "ebridge/bridge.hpp"

namespace ebridge {

// Per-path controller state. The simulation loop calls control(i, x_i) before the
// step-i increment exists and observe_noise(i, dW_i) after it has been applied, so
// causality is enforced by the calling order, not by convention.
class PathController {
 public:
  virtual ~PathController() = default;
  virtual Vector control(int step, const Vector& averaged_state) = 0;
  virtual void observe_noise(int step, const Vector& dw) = 0;
};

// Immutable synthesis product shared across paths (and threads); start() hands out
// the mutable per-path accumulator.
class ControlLaw {
 public:
  virtual ~ControlLaw() = default;
  virtual int input_dim() const = 0;
  virtual std::unique_ptr<PathController> start() const = 0;
};

std::shared_ptr<const ControlLaw> make_zero_law(int input_dim);

// Open-loop minimum-energy steering sampled at the grid left endpoints.
std::shared_ptr<const ControlLaw> make_deterministic_law(const EnsembleSpec& ens,
                                                         const BridgeProblem& prob);

// The discrete regularized gains, evaluated in streaming form.
std::shared_ptr<const ControlLaw> make_discrete_law(const EnsembleSpec& ens,
                                                    const BridgeProblem& prob);

// The continuous feedforward control on the simulation grid (exact horizon
// Gramians instead of regularized kernels). Singular Gramians at needed grid
// points surface as Error(singular_gramian) naming the time, lazily: only once
// an evaluation actually depends on the offending increment.
std::shared_ptr<const ControlLaw> make_continuous_law(const EnsembleSpec& ens,
                                                      const BridgeProblem& prob);

// State feedback -x/(t_f - t); rejects non-Brownian families at construction.
std::shared_ptr<const ControlLaw> make_markov_law(const EnsembleSpec& ens,
                                                  const BridgeProblem& prob);

}  // namespace ebridge
