#pragma once

#include <vector>

#include "ebridge/ensemble.hpp"

namespace ebridge {

inline constexpr int kDefaultTimePanels = 256;
inline constexpr double kDefaultEigThreshold = 1e-10;

// int_s^t Phi(t,tau) Phi(t,tau)^T dtau by composite 4-point Gauss-Legendre over
// n_panels equal panels. Symmetric by construction; zero when s == t.
Matrix gramian(const EnsembleSpec& ens, double t, double s, int n_panels = kDefaultTimePanels);

struct ControllabilityReport {
  bool invertible = false;
  double cond = 0.0;  // max_eig / min_eig; +inf when not invertible
  double min_eig = 0.0;
  double max_eig = 0.0;
  double threshold = kDefaultEigThreshold;
};

// Eigenvalue gate on the averaged Gramian over [0, t_f]: invertible iff
// min_eig > threshold * max_eig.
ControllabilityReport check_avg_controllability(const EnsembleSpec& ens, double t_f,
                                                double threshold = kDefaultEigThreshold,
                                                int n_panels = kDefaultTimePanels);

// Horizon-t_f Gramians on the uniform simulation grid t_i = i t_f / k:
//   phi_at[i]  = Phi(t_f, t_i)                       (i = 0..k)
//   gram_at[i] = int_{t_i}^{t_f} Phi Phi^T dtau      (gram_at[k] = 0)
// Built by one reverse cumulative sweep over per-panel integrals, so the grid
// values are exactly additive and decrease monotonically in the PSD order.
class GramianTable {
 public:
  GramianTable(const EnsembleSpec& ens, double t_f, int k, int points_per_panel = 4);

  double t_f() const { return t_f_; }
  int steps() const { return static_cast<int>(grid_.size()) - 1; }
  const std::vector<double>& grid() const { return grid_; }
  const Matrix& phi_at(int i) const { return phi_at_.at(i); }
  const Matrix& gram_at(int i) const { return gram_at_.at(i); }
  double cond() const { return cond_; }  // conditioning of the full-horizon Gramian

 private:
  double t_f_;
  std::vector<double> grid_;
  std::vector<Matrix> phi_at_;
  std::vector<Matrix> gram_at_;
  double cond_;
};

// Minimum-energy open-loop steering of the averaged state, evaluable at any
// 0 <= t <= t_f: u(t) = Phi(t_f,t)^T G^{-1} (xf - E[exp(A t_f)] x0).
class SteeringControl {
 public:
  SteeringControl(EnsembleSpec ens, double t_f, Vector weight_vec);
  Vector operator()(double t) const;
  double t_f() const { return t_f_; }
  const Vector& weight_vector() const { return weight_vec_; }

 private:
  EnsembleSpec ens_;
  double t_f_;
  Vector weight_vec_;  // G^{-1} applied to the steering residual
};

// Throws Error(singular_gramian) when the controllability gate fails.
SteeringControl deterministic_steer(const EnsembleSpec& ens, const Vector& x0, const Vector& xf,
                                    double t_f, int n_panels = kDefaultTimePanels);

// Minimum control energy (1/2)||xf - E[exp(A t_f)] x0||^2 in the G^{-1} norm.
double transport_cost(const EnsembleSpec& ens, const Vector& x0, const Vector& xf, double t_f,
                      int n_panels = kDefaultTimePanels);

// Brownian transition density (2 pi (t-s))^{-d/2} exp(-||x-y||^2 / (2(t-s))).
double density_brownian(double s, const Vector& x, double t, const Vector& y);

// Gaussian transition kernel of the noise-scaled averaged dynamics:
// (2 pi eps)^{-d/2} det(G_{t,s})^{-1/2} exp(-||y - E[exp(A(t-s))] x||^2_{G^{-1}} / (2 eps)).
double density_gramian(const EnsembleSpec& ens, double eps, double s, const Vector& x, double t,
                       const Vector& y, int n_panels = kDefaultTimePanels);

}  // namespace ebridge
