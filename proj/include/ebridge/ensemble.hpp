#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "ebridge/linalg.hpp"

namespace ebridge {

struct EnsembleNode {
  double theta = 0.0;
  double weight = 0.0;
  Matrix a;  // state_dim x state_dim
  Matrix b;  // state_dim x input_dim
};

// Finite quadrature model of a parameter family (A(theta), B(theta)), theta in [0,1].
// Nodes carry the integration weights, so every averaged quantity below is a plain
// weighted sum over nodes. Immutable after construction.
class EnsembleSpec {
 public:
  EnsembleSpec(int state_dim, int input_dim, std::vector<EnsembleNode> nodes);

  using Family = std::function<std::pair<Matrix, Matrix>(double theta)>;

  // Gauss-Legendre discretization of a continuous family on [0,1].
  static EnsembleSpec uniform(int n_nodes, const Family& family);

  int state_dim() const { return state_dim_; }
  int input_dim() const { return input_dim_; }
  const std::vector<EnsembleNode>& nodes() const { return nodes_; }

  // Averaged impulse response sum_n w_n exp(A_n (t_f - tau)) B_n; requires 0 <= tau <= t_f.
  // Depends on (t_f - tau) only, which callers exploit to cache it on uniform grids.
  Matrix averaged_impulse(double t_f, double tau) const;

  // sum_n w_n exp(A_n t): the map taking an initial state to the averaged free endpoint.
  Matrix averaged_exp(double t) const;

  // All drift matrices zero and inputs the identity (the family whose averaged
  // dynamics is a standard Brownian motion under zero control).
  bool is_brownian() const { return brownian_; }

 private:
  int state_dim_;
  int input_dim_;
  std::vector<EnsembleNode> nodes_;
  bool brownian_;
};

}  // namespace ebridge
