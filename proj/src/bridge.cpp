#include "ebridge/bridge.hpp"

#include <cmath>
#include <string>

#include "ebridge/error.hpp"

namespace ebridge {

void BridgeProblem::validate(const EnsembleSpec& ens) const {
  if (x0.size() != ens.state_dim() || xf.size() != ens.state_dim())
    fail(ErrorCode::invalid_input, "problem: x0/xf must have the ensemble state dimension");
  if (!x0.allFinite() || !xf.allFinite()) fail(ErrorCode::invalid_input, "problem: non-finite endpoint");
  if (!(t_f > 0.0)) fail(ErrorCode::invalid_input, "problem: t_f must be > 0");
  if (!(eps >= 0.0)) fail(ErrorCode::invalid_input, "problem: eps must be >= 0");
  if (!(penalty_a > 0.0)) fail(ErrorCode::invalid_input, "problem: penalty_a must be > 0");
  if (steps_k < 1) fail(ErrorCode::invalid_input, "problem: steps_k must be >= 1");
}

ControllerGains ControllerGains::synthesize(const EnsembleSpec& ens, const BridgeProblem& prob) {
  prob.validate(ens);
  const int k = prob.steps_k;
  const int d = ens.state_dim();
  const double dt = prob.dt();

  ControllerGains gains;
  gains.k_ = k;
  gains.dt_ = dt;
  gains.t_f_ = prob.t_f;
  gains.target_ = prob.xf - ens.averaged_exp(prob.t_f) * prob.x0;

  gains.phi_.resize(k);
  for (int i = 0; i < k; ++i) gains.phi_[i] = ens.averaged_impulse(prob.t_f, i * dt);

  // Reverse cumulative sweep: M_j = M_{j+1} + Phi_j Phi_j^T dt, factored once per j.
  gains.factor_.resize(k);
  gains.kernel_min_eig_.resize(k);
  gains.kernel_max_eig_.resize(k);
  Matrix m = (0.5 / prob.penalty_a) * Matrix::Identity(d, d);
  for (int j = k - 1; j >= 0; --j) {
    m.noalias() += dt * (gains.phi_[j] * gains.phi_[j].transpose());
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success)
      fail(ErrorCode::singular_gramian,
           "synthesize: regularized kernel not positive definite at step " + std::to_string(j));
    gains.factor_[j] = llt.solve(gains.phi_[j]);
    if (j == 0) gains.steering_vec_ = llt.solve(gains.target_);
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    gains.kernel_min_eig_[j] = es.eigenvalues().minCoeff();
    gains.kernel_max_eig_[j] = es.eigenvalues().maxCoeff();
  }
  return gains;
}

Matrix ControllerGains::gain(int i, int j) const {
  if (j < 0 || i >= k_ || j >= i)
    fail(ErrorCode::invalid_input, "gain(i,j): defined only for 0 <= j < i < k");
  return phi_[i].transpose() * factor_[j];
}

Vector ControllerGains::open_loop(int i) const {
  if (i < 0 || i >= k_) fail(ErrorCode::invalid_input, "open_loop(i): i out of range");
  return phi_[i].transpose() * steering_vec_;
}

Vector continuous_feedforward(const EnsembleSpec& ens, const BridgeProblem& prob,
                              const GramianTable& table, const NoisePath& noise, int t_index) {
  prob.validate(ens);
  const int k = prob.steps_k;
  if (t_index < 0 || t_index >= k)
    fail(ErrorCode::invalid_input, "continuous_feedforward: t_index out of range");
  if (table.steps() != k || noise.steps() != k)
    fail(ErrorCode::invalid_input, "continuous_feedforward: table/noise grid mismatch with steps_k");

  const double gate = 1e-12;
  Eigen::SelfAdjointEigenSolver<Matrix> es0(table.gram_at(0));
  const double scale = es0.eigenvalues().maxCoeff();
  const Vector target = prob.xf - ens.averaged_exp(prob.t_f) * prob.x0;
  if (!(es0.eigenvalues().minCoeff() > gate * scale))
    fail(ErrorCode::singular_gramian, "continuous_feedforward: Gramian singular at t=0");

  Vector acc = es0.eigenvectors() *
               (es0.eigenvalues().cwiseInverse().asDiagonal() * (es0.eigenvectors().transpose() * target));
  const double sqrt_eps = std::sqrt(prob.eps);
  for (int j = 0; j < t_index; ++j) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(j == 0 ? table.gram_at(0) : table.gram_at(j));
    if (!(es.eigenvalues().minCoeff() > gate * scale))
      fail(ErrorCode::singular_gramian, "continuous_feedforward: Gramian singular at t=" +
                                            std::to_string(table.grid()[j]));
    const Vector rhs = table.phi_at(j) * noise.increment(j);
    acc.noalias() -= sqrt_eps * (es.eigenvectors() *
                                 (es.eigenvalues().cwiseInverse().asDiagonal() *
                                  (es.eigenvectors().transpose() * rhs)));
  }
  return table.phi_at(t_index).transpose() * acc;
}

Vector markov_bridge_control(const Vector& x, double t, double t_f) {
  if (!(t < t_f)) fail(ErrorCode::invalid_input, "markov_bridge_control: requires t < t_f");
  if (!x.allFinite()) fail(ErrorCode::invalid_input, "markov_bridge_control: non-finite state");
  return -x / (t_f - t);
}

}  // namespace ebridge
