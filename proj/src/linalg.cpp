#include "ebridge/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

#include "ebridge/error.hpp"

namespace ebridge {

QuadRule gauss_legendre_01(int n) {
  if (n < 1) fail(ErrorCode::invalid_input, "quadrature rule needs at least one node");
  QuadRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  // Newton iteration on P_n, roots seeded by the Chebyshev approximation.
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    double w = 2.0 / ((1.0 - z * z) * pp * pp);
    // map [-1,1] -> [0,1]
    rule.nodes[i] = 0.5 * (1.0 - z);
    rule.nodes[n - 1 - i] = 0.5 * (1.0 + z);
    rule.weights[i] = 0.5 * w;
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  return rule;
}

Matrix matrix_exp(const Matrix& a, double t) {
  if (a.rows() != a.cols()) fail(ErrorCode::invalid_input, "matrix_exp: matrix must be square");
  if (!a.allFinite() || !std::isfinite(t)) fail(ErrorCode::invalid_input, "matrix_exp: non-finite input");
  return Matrix((a * t).exp());
}

}  // namespace ebridge
