#pragma once

#include <Eigen/Dense>
#include <vector>

namespace ebridge {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Gauss-Legendre rule mapped to [0,1]; nodes strictly increasing, weights sum to 1.
struct QuadRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

QuadRule gauss_legendre_01(int n);

// exp(A*t) by scaling-and-squaring with a diagonal Pade approximant.
Matrix matrix_exp(const Matrix& a, double t);

}  // namespace ebridge
