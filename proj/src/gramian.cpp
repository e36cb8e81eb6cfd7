#include "ebridge/gramian.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "ebridge/error.hpp"

namespace ebridge {

namespace {

// One panel of int Phi(horizon, tau) Phi^T dtau over [lo, hi].
Matrix panel_integral(const EnsembleSpec& ens, double horizon, double lo, double hi,
                      const QuadRule& rule) {
  const int d = ens.state_dim();
  Matrix acc = Matrix::Zero(d, d);
  const double width = hi - lo;
  for (size_t q = 0; q < rule.nodes.size(); ++q) {
    const Matrix phi = ens.averaged_impulse(horizon, lo + rule.nodes[q] * width);
    acc.noalias() += (rule.weights[q] * width) * (phi * phi.transpose());
  }
  return acc;
}

Matrix symmetrized(Matrix g) {
  g = 0.5 * (g + g.transpose()).eval();
  return g;
}

std::pair<double, double> eig_range(const Matrix& g) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(g);
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

Vector steering_residual(const EnsembleSpec& ens, const Vector& x0, const Vector& xf, double t_f) {
  if (x0.size() != ens.state_dim() || xf.size() != ens.state_dim())
    fail(ErrorCode::invalid_input, "steering: x0/xf must have the ensemble state dimension");
  if (!x0.allFinite() || !xf.allFinite()) fail(ErrorCode::invalid_input, "steering: non-finite endpoint");
  return xf - ens.averaged_exp(t_f) * x0;
}

// Shared gate + factorization for the steering ops.
Eigen::LDLT<Matrix> gated_factorization(const Matrix& g, const std::string& who) {
  const auto [min_eig, max_eig] = eig_range(g);
  if (!(min_eig > kDefaultEigThreshold * max_eig) || !(max_eig > 0.0)) {
    fail(ErrorCode::singular_gramian,
         who + ": averaged Gramian is numerically singular (min_eig=" + std::to_string(min_eig) +
             ", max_eig=" + std::to_string(max_eig) + ")");
  }
  return g.ldlt();
}

}  // namespace

Matrix gramian(const EnsembleSpec& ens, double t, double s, int n_panels) {
  if (!(s >= 0.0)) fail(ErrorCode::invalid_input, "gramian: s must be >= 0");
  if (s > t) fail(ErrorCode::invalid_input, "gramian: s must be <= t");
  if (n_panels < 2) fail(ErrorCode::invalid_input, "gramian: n_panels must be >= 2");
  const int d = ens.state_dim();
  if (t == s) return Matrix::Zero(d, d);
  const QuadRule rule = gauss_legendre_01(4);
  Matrix acc = Matrix::Zero(d, d);
  const double width = (t - s) / n_panels;
  for (int p = 0; p < n_panels; ++p)
    acc += panel_integral(ens, t, s + p * width, s + (p + 1) * width, rule);
  return symmetrized(std::move(acc));
}

ControllabilityReport check_avg_controllability(const EnsembleSpec& ens, double t_f,
                                                double threshold, int n_panels) {
  if (!(t_f > 0.0)) fail(ErrorCode::invalid_input, "controllability check: t_f must be > 0");
  if (!(threshold > 0.0)) fail(ErrorCode::invalid_input, "controllability check: threshold must be > 0");
  const Matrix g = gramian(ens, t_f, 0.0, n_panels);
  ControllabilityReport report;
  report.threshold = threshold;
  std::tie(report.min_eig, report.max_eig) = eig_range(g);
  report.invertible = report.max_eig > 0.0 && report.min_eig > threshold * report.max_eig;
  report.cond = report.invertible ? report.max_eig / report.min_eig
                                  : std::numeric_limits<double>::infinity();
  return report;
}

GramianTable::GramianTable(const EnsembleSpec& ens, double t_f, int k, int points_per_panel) {
  if (!(t_f > 0.0)) fail(ErrorCode::invalid_input, "gramian table: t_f must be > 0");
  if (k < 1) fail(ErrorCode::invalid_input, "gramian table: k must be >= 1");
  if (points_per_panel < 2) fail(ErrorCode::invalid_input, "gramian table: points_per_panel must be >= 2");
  t_f_ = t_f;
  const double dt = t_f / k;
  grid_.resize(k + 1);
  for (int i = 0; i <= k; ++i) grid_[i] = i * dt;
  grid_[k] = t_f;
  phi_at_.resize(k + 1);
  for (int i = 0; i <= k; ++i) phi_at_[i] = ens.averaged_impulse(t_f, grid_[i]);
  const QuadRule rule = gauss_legendre_01(points_per_panel);
  gram_at_.assign(k + 1, Matrix());
  gram_at_[k] = Matrix::Zero(ens.state_dim(), ens.state_dim());
  for (int i = k - 1; i >= 0; --i)
    gram_at_[i] = symmetrized(gram_at_[i + 1] + panel_integral(ens, t_f, grid_[i], grid_[i + 1], rule));
  const auto [min_eig, max_eig] = eig_range(gram_at_[0]);
  cond_ = (min_eig > 0.0) ? max_eig / min_eig : std::numeric_limits<double>::infinity();
}

SteeringControl::SteeringControl(EnsembleSpec ens, double t_f, Vector weight_vec)
    : ens_(std::move(ens)), t_f_(t_f), weight_vec_(std::move(weight_vec)) {}

Vector SteeringControl::operator()(double t) const {
  return ens_.averaged_impulse(t_f_, t).transpose() * weight_vec_;
}

SteeringControl deterministic_steer(const EnsembleSpec& ens, const Vector& x0, const Vector& xf,
                                    double t_f, int n_panels) {
  if (!(t_f > 0.0)) fail(ErrorCode::invalid_input, "steering: t_f must be > 0");
  const Vector residual = steering_residual(ens, x0, xf, t_f);
  const Matrix g = gramian(ens, t_f, 0.0, n_panels);
  const auto ldlt = gated_factorization(g, "deterministic_steer");
  return SteeringControl(ens, t_f, ldlt.solve(residual));
}

double transport_cost(const EnsembleSpec& ens, const Vector& x0, const Vector& xf, double t_f,
                      int n_panels) {
  if (!(t_f > 0.0)) fail(ErrorCode::invalid_input, "transport_cost: t_f must be > 0");
  const Vector residual = steering_residual(ens, x0, xf, t_f);
  const Matrix g = gramian(ens, t_f, 0.0, n_panels);
  const auto ldlt = gated_factorization(g, "transport_cost");
  return std::max(0.0, 0.5 * residual.dot(ldlt.solve(residual)));
}

double density_brownian(double s, const Vector& x, double t, const Vector& y) {
  if (x.size() != y.size() || x.size() < 1)
    fail(ErrorCode::invalid_input, "density_brownian: x and y must have equal positive dimension");
  if (!(t > s)) fail(ErrorCode::invalid_input, "density_brownian: requires t > s");
  const double d = static_cast<double>(x.size());
  const double gap = t - s;
  return std::exp(-0.5 * d * std::log(2.0 * M_PI * gap) - (x - y).squaredNorm() / (2.0 * gap));
}

double density_gramian(const EnsembleSpec& ens, double eps, double s, const Vector& x, double t,
                       const Vector& y, int n_panels) {
  if (!(t > s)) fail(ErrorCode::invalid_input, "density_gramian: requires t > s");
  if (!(s >= 0.0)) fail(ErrorCode::invalid_input, "density_gramian: requires s >= 0");
  if (!(eps > 0.0)) fail(ErrorCode::invalid_input, "density_gramian: requires eps > 0");
  const int d = ens.state_dim();
  if (x.size() != d || y.size() != d)
    fail(ErrorCode::invalid_input, "density_gramian: x and y must have the state dimension");
  // Gramian of the shifted window [0, t-s]: Phi depends on the gap only.
  const Matrix g = gramian(ens, t - s, 0.0, n_panels);
  const auto ldlt = gated_factorization(g, "density_gramian");
  double log_det = 0.0;
  for (int i = 0; i < d; ++i) {
    const double pivot = ldlt.vectorD()(i);
    if (!(pivot > 0.0)) fail(ErrorCode::singular_gramian, "density_gramian: Gramian not positive definite");
    log_det += std::log(pivot);
  }
  const Vector residual = y - ens.averaged_exp(t - s) * x;
  const double quad_form = residual.dot(ldlt.solve(residual));
  return std::exp(-0.5 * d * std::log(2.0 * M_PI * eps) - 0.5 * log_det - quad_form / (2.0 * eps));
}

}  // namespace ebridge
