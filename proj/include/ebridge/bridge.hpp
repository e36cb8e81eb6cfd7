#pragma once

#include <memory>
#include <vector>

#include "ebridge/ensemble.hpp"
#include "ebridge/gramian.hpp"
#include "ebridge/noise.hpp"

namespace ebridge {

struct BridgeProblem {
  Vector x0;
  Vector xf;
  double t_f = 1.0;
  double eps = 0.0;       // noise intensity
  double penalty_a = 1.0; // terminal quadratic penalty weight
  int steps_k = 1;

  double dt() const { return t_f / steps_k; }
  void validate(const EnsembleSpec& ens) const;
};

// Closed-form gains of the penalty-regularized discrete bridge controller on the
// uniform grid t_i = i t_f / k:
//
//   u_i = -sqrt(eps) sum_{j<i} K[i][j] dW_j + v[i]
//   K[i][j] = Phi_i^T M_j^{-1} Phi_j
//   v[i]    = Phi_i^T M_0^{-1} (xf - E[exp(A t_f)] x0)
//   M_j     = sum_{alpha=j}^{k-1} Phi_alpha Phi_alpha^T dt + (1/(2a)) I
//
// Gains are strictly causal: K[i][j] exists only for 0 <= j < i <= k-1. They are
// stored in factored form (Y_j = M_j^{-1} Phi_j per step), which is what makes a
// single reverse sweep with k factorizations sufficient and lets path evaluation
// stream in O(k) by accumulating z_i = sum_{j<i} Y_j dW_j, u_i = Phi_i^T (w - sqrt(eps) z_i).
class ControllerGains {
 public:
  static ControllerGains synthesize(const EnsembleSpec& ens, const BridgeProblem& prob);

  int steps() const { return k_; }
  double dt() const { return dt_; }
  double t_f() const { return t_f_; }
  int state_dim() const { return static_cast<int>(phi_[0].rows()); }
  int input_dim() const { return static_cast<int>(phi_[0].cols()); }

  Matrix gain(int i, int j) const;      // K[i][j], requires 0 <= j < i < k
  Vector open_loop(int i) const;        // v[i],    requires 0 <= i < k

  const Matrix& phi_step(int i) const { return phi_.at(i); }
  const Matrix& factor(int j) const { return factor_.at(j); }        // Y_j
  const Vector& steering_vector() const { return steering_vec_; }    // M_0^{-1} target
  const Vector& target() const { return target_; }                   // xf - E[exp(A t_f)] x0

  // Extremes of the regularized kernels M_j, for conditioning metadata.
  double kernel_min_eig(int j) const { return kernel_min_eig_.at(j); }
  double kernel_max_eig(int j) const { return kernel_max_eig_.at(j); }

 private:
  ControllerGains() = default;

  int k_ = 0;
  double dt_ = 0.0;
  double t_f_ = 0.0;
  std::vector<Matrix> phi_;
  std::vector<Matrix> factor_;
  std::vector<double> kernel_min_eig_;
  std::vector<double> kernel_max_eig_;
  Vector steering_vec_;
  Vector target_;
};

// Left-endpoint Ito evaluation of the continuous feedforward bridge control at
// grid point t_index, consuming increments strictly before it:
//   u(t_i) = -sqrt(eps) sum_{j<i} Phi(t_f,t_i)^T G_{t_f,t_j}^{-1} Phi(t_f,t_j) dW_j
//            + Phi(t_f,t_i)^T G_{t_f,0}^{-1} (xf - E[exp(A t_f)] x0)
// Throws Error(singular_gramian) naming the grid time if some needed G is singular.
Vector continuous_feedforward(const EnsembleSpec& ens, const BridgeProblem& prob,
                              const GramianTable& table, const NoisePath& noise, int t_index);

// Markov form of the Brownian special case: u(x,t) = -x / (t_f - t). Valid only
// against the Brownian family (the caller enforces the family; this checks t < t_f).
Vector markov_bridge_control(const Vector& x, double t, double t_f);

}  // namespace ebridge
