#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ebridge/control_law.hpp"
#include "ebridge/noise.hpp"

namespace ebridge {

struct SimulationRecord {
  std::vector<std::vector<Vector>> node_states;  // [node][step 0..k]; empty for averaged runs
  std::vector<Vector> averaged;                  // [step 0..k]
  std::vector<Vector> control;                   // [step 0..k-1]
  std::vector<Vector> noise;                     // [step 0..k-1]
  double running_cost = 0.0;                     // (1/2) sum ||u_i||^2 dt
  double penalized_cost = 0.0;                   // running + a ||x_k - xf||^2
  double endpoint_error = 0.0;                   // ||x_k - xf||
};

// Euler-Maruyama on every node with ONE shared Wiener path:
//   X_{i+1} = X_i + (A_n X_i + B_n u_i) dt + sqrt(eps) B_n dW_i.
// The averaged state is the node weight-sum at every step. The law sees the
// averaged state and is asked for u_i before the step-i increment is revealed.
// Throws Error(divergence) naming the step once any node state leaves IEEE range.
SimulationRecord simulate_ensemble(const EnsembleSpec& ens, const BridgeProblem& prob,
                                   const ControlLaw& law, const NoisePath& noise);

// Discretization-exact recursion for the averaged state: inputs are held at their
// left-endpoint values and propagated through the true one-step semigroups,
//   y_n(t_{i+1}) = exp(A_n dt) (y_n(t_i) + B_n (u_i dt + sqrt(eps) dW_i)),
// so the endpoint satisfies x_k = E[exp(A t_f)] x0 + sum_j Phi(t_f,t_j)(u_j dt + sqrt(eps) dW_j)
// identically. This is the model the discrete gains are synthesized against.
SimulationRecord simulate_average(const EnsembleSpec& ens, const BridgeProblem& prob,
                                  const ControlLaw& law, const NoisePath& noise);

// (running, penalized) recomputed from a record.
std::pair<double, double> evaluate_cost(const SimulationRecord& rec, const BridgeProblem& prob);

enum class SimMethod {
  euler,  // per-node Euler-Maruyama
  exact,  // per-node one-step semigroup on held inputs
};

struct EndpointStats {
  int n_paths = 0;
  std::uint64_t base_seed = 0;
  double q50 = 0.0, q90 = 0.0, q99 = 0.0;  // quantiles of ||x_k - xf||
  Vector mean_endpoint;
  Vector endpoint_stderr;
  double running_cost_mean = 0.0, running_cost_stderr = 0.0;
  double penalized_cost_mean = 0.0, penalized_cost_stderr = 0.0;
};

// Monte Carlo endpoint statistics over n_paths independent paths; path p is
// driven by seed base_seed + p and results land in per-path slots, so the
// numbers are reproducible and identical for any thread count.
EndpointStats verify_endpoint(const EnsembleSpec& ens, const BridgeProblem& prob,
                              const ControlLaw& law, int n_paths, std::uint64_t base_seed,
                              int threads = 0, SimMethod method = SimMethod::exact);

struct ConvergenceCell {
  double penalty_a = 0.0;
  int steps_k = 0;
  double mean_sq_distance = 0.0;  // E sum_i ||u_{a,k}(t_i) - u_ref(t_i)||^2 dt over the kept window
  double se = 0.0;                // standard error of that mean
};

struct ConvergenceReport {
  std::vector<ConvergenceCell> cells;  // a-major, then k, matching the input lists
  int reference_k = 0;                 // finest grid, carries the continuous reference
  int excluded_tail_steps = 0;         // fine grid points within this many dt of t_f are dropped
  int n_paths = 0;
  std::uint64_t base_seed = 0;
};

// Squared control distance between each regularized discrete controller and the
// continuous feedforward reference, both realized on the finest grid from the
// same Wiener paths (coarse controllers consume block-summed increments and are
// held piecewise constant). Every k must divide the largest k, which must exceed
// the 10-step terminal window that is excluded from the distance.
ConvergenceReport convergence_study(const EnsembleSpec& ens, const BridgeProblem& prob,
                                    const std::vector<double>& a_list, const std::vector<int>& k_list,
                                    int n_paths, std::uint64_t base_seed, int threads = 0);

}  // namespace ebridge
