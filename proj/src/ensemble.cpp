#include "ebridge/ensemble.hpp"

#include <cmath>
#include <string>

#include "ebridge/error.hpp"

namespace ebridge {

namespace {

bool all_zero(const Matrix& m) { return m.lpNorm<Eigen::Infinity>() <= 1e-14; }

bool is_identity(const Matrix& m) {
  return m.rows() == m.cols() && (m - Matrix::Identity(m.rows(), m.cols())).lpNorm<Eigen::Infinity>() <= 1e-14;
}

}  // namespace

EnsembleSpec::EnsembleSpec(int state_dim, int input_dim, std::vector<EnsembleNode> nodes)
    : state_dim_(state_dim), input_dim_(input_dim), nodes_(std::move(nodes)) {
  if (state_dim_ < 1 || input_dim_ < 1) fail(ErrorCode::invalid_input, "ensemble: dimensions must be positive");
  if (nodes_.empty()) fail(ErrorCode::invalid_input, "ensemble: needs at least one node");
  double weight_sum = 0.0;
  for (size_t n = 0; n < nodes_.size(); ++n) {
    const EnsembleNode& node = nodes_[n];
    const std::string where = "ensemble node " + std::to_string(n);
    if (node.a.rows() != state_dim_ || node.a.cols() != state_dim_)
      fail(ErrorCode::invalid_input, where + ": A must be state_dim x state_dim");
    if (node.b.rows() != state_dim_ || node.b.cols() != input_dim_)
      fail(ErrorCode::invalid_input, where + ": B must be state_dim x input_dim");
    if (!node.a.allFinite() || !node.b.allFinite() || !std::isfinite(node.theta) || !std::isfinite(node.weight))
      fail(ErrorCode::invalid_input, where + ": non-finite entry");
    if (node.weight < 0.0) fail(ErrorCode::invalid_input, where + ": negative weight");
    if (n > 0 && !(node.theta > nodes_[n - 1].theta))
      fail(ErrorCode::invalid_input, where + ": thetas must be strictly increasing");
    weight_sum += node.weight;
  }
  if (std::abs(weight_sum - 1.0) > 1e-12)
    fail(ErrorCode::invalid_input, "ensemble: weights must sum to 1 (got " + std::to_string(weight_sum) + ")");
  brownian_ = true;
  for (const EnsembleNode& node : nodes_)
    if (!all_zero(node.a) || !is_identity(node.b)) {
      brownian_ = false;
      break;
    }
}

EnsembleSpec EnsembleSpec::uniform(int n_nodes, const Family& family) {
  if (n_nodes < 1) fail(ErrorCode::invalid_input, "ensemble: n_nodes must be >= 1");
  const QuadRule rule = gauss_legendre_01(n_nodes);
  std::vector<EnsembleNode> nodes(n_nodes);
  for (int i = 0; i < n_nodes; ++i) {
    auto [a, b] = family(rule.nodes[i]);
    nodes[i] = EnsembleNode{rule.nodes[i], rule.weights[i], std::move(a), std::move(b)};
  }
  if (nodes[0].a.rows() < 1) fail(ErrorCode::invalid_input, "ensemble: family returned empty matrices");
  const int d = static_cast<int>(nodes[0].a.rows());
  const int m = static_cast<int>(nodes[0].b.cols());
  return EnsembleSpec(d, m, std::move(nodes));
}

Matrix EnsembleSpec::averaged_impulse(double t_f, double tau) const {
  if (!(tau >= 0.0)) fail(ErrorCode::invalid_input, "averaged_impulse: tau must be >= 0");
  if (!(tau <= t_f)) fail(ErrorCode::invalid_input, "averaged_impulse: tau must be <= t_f");
  const double h = t_f - tau;
  Matrix out = Matrix::Zero(state_dim_, input_dim_);
  for (const EnsembleNode& node : nodes_) out += node.weight * (matrix_exp(node.a, h) * node.b);
  return out;
}

Matrix EnsembleSpec::averaged_exp(double t) const {
  Matrix out = Matrix::Zero(state_dim_, state_dim_);
  for (const EnsembleNode& node : nodes_) out += node.weight * matrix_exp(node.a, t);
  return out;
}

}  // namespace ebridge
