#include <cmath>
#include <string>
#include <vector>

#include <doctest.h>

#include "ebridge/error.hpp"
#include "ebridge/families.hpp"
#include "ebridge/gramian.hpp"
#include "oracles.hpp"

using ebridge::EnsembleSpec;
using ebridge::Matrix;
using ebridge::Vector;

namespace {

std::vector<std::pair<std::string, EnsembleSpec>> property_families() {
  std::vector<std::pair<std::string, EnsembleSpec>> out;
  out.emplace_back("brownian", ebridge::ensemble_from_json(R"({"family":"brownian","dim":2})"));
  out.emplace_back("scalar_theta_drift",
                   ebridge::ensemble_from_json(R"({"family":"scalar_theta_drift"})"));
  out.emplace_back("shifted_drift",
                   ebridge::ensemble_from_json(R"({"family":"shifted_drift","dim":2})"));
  out.emplace_back("double_integrator",
                   ebridge::ensemble_from_json(R"({"family":"double_integrator"})"));
  out.emplace_back("rotation_shear_3x2",
                   ebridge::ensemble_from_json(R"({"family":"rotation_shear_3x2"})"));
  out.emplace_back("rank_deficient_input",
                   ebridge::ensemble_from_json(R"({"family":"rank_deficient_input"})"));
  return out;
}

double min_eig(const Matrix& g) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(g, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("brownian gramian is the gap times the identity") {
  const auto ens = ebridge::ensemble_from_json(R"({"family":"brownian","dim":2})");
  for (auto [t, s] : {std::pair{1.0, 0.0}, {1.3, 0.4}, {2.0, 2.0}}) {
    const Matrix g = ebridge::gramian(ens, t, s);
    CHECK((g - (t - s) * Matrix::Identity(2, 2)).norm() <= 1e-12 * std::max(1.0, t - s));
  }
}

TEST_CASE("scalar drift gramian matches the Simpson route") {
  const auto ens = ebridge::ensemble_from_json(R"({"family":"scalar_theta_drift"})");
  const double got = ebridge::gramian(ens, 1.0, 0.0)(0, 0);
  // Phi(1, tau) = (e^{1-tau} - 1)/(1-tau) through the same 16-node parameter rule;
  // the oracle only replaces the time integration.
  const auto rule = ebridge::gauss_legendre_01(16);
  const auto phi = [&rule](double gap) {
    double acc = 0.0;
    for (size_t q = 0; q < rule.nodes.size(); ++q)
      acc += rule.weights[q] * std::exp(rule.nodes[q] * gap);
    return acc;
  };
  const double want =
      oracles::simpson([&phi](double tau) { return phi(1.0 - tau) * phi(1.0 - tau); }, 0.0, 1.0, 4000);
  CHECK(got == doctest::Approx(want).epsilon(1e-10));
  // Series value of the double integral sum_{n,m} 1/((n+m+1)(n+1)!(m+1)!).
  CHECK(got == doctest::Approx(1.7794462761594574).epsilon(1e-9));
}

TEST_CASE("gramian property suite across built-in families") {
  const double t = 1.3;
  for (const auto& [name, ens] : property_families()) {
    CAPTURE(name);
    const Matrix g_full = ebridge::gramian(ens, t, 0.0);
    const double scale = g_full.norm();

    CHECK((g_full - g_full.transpose()).norm() <= 1e-10 * scale);
    CHECK(min_eig(g_full) >= -1e-10 * scale);
    CHECK(ebridge::gramian(ens, t, t).norm() == 0.0);

    const Matrix g_mid = ebridge::gramian(ens, t, 0.4);
    const Matrix g_late = ebridge::gramian(ens, t, 0.9);
    CHECK(min_eig(g_full - g_mid) >= -1e-10 * scale);
    CHECK(min_eig(g_mid - g_late) >= -1e-10 * scale);

    const ebridge::GramianTable table(ens, t, 8);
    for (int i = 0; i <= 8; ++i) {
      const Matrix direct = ebridge::gramian(ens, t, table.grid()[i]);
      CHECK((table.gram_at(i) - direct).norm() <= 1e-9 * std::max(1.0, scale));
      if (i < 8) CHECK(min_eig(table.gram_at(i) - table.gram_at(i + 1)) >= -1e-12 * scale);
      CHECK((table.phi_at(i) - ens.averaged_impulse(t, table.grid()[i])).norm() == 0.0);
    }
    CHECK(table.gram_at(8).norm() == 0.0);
  }
}

TEST_CASE("controllability gate") {
  const auto brown = ebridge::ensemble_from_json(R"({"family":"brownian","dim":2})");
  const auto ok = ebridge::check_avg_controllability(brown, 1.0);
  CHECK(ok.invertible);
  CHECK(ok.cond == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(ok.min_eig == doctest::Approx(1.0).epsilon(1e-12));

  const auto rank_def = ebridge::ensemble_from_json(R"({"family":"rank_deficient_input"})");
  const auto failed = ebridge::check_avg_controllability(rank_def, 1.0);
  CHECK_FALSE(failed.invertible);
  CHECK(std::isinf(failed.cond));
  CHECK(failed.max_eig == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(failed.min_eig) <= 1e-12);

  CHECK_THROWS_AS(ebridge::check_avg_controllability(brown, 0.0), ebridge::Error);
}

TEST_CASE("deterministic steering reaches the target through an RK4 route") {
  const auto ens = ebridge::ensemble_from_json(R"({"family":"scalar_theta_drift"})");
  Vector x0(1), xf(1);
  x0 << 0.3;
  xf << -0.8;
  const auto steer = ebridge::deterministic_steer(ens, x0, xf, 1.0);
  const Vector end = oracles::rk4_averaged_endpoint(
      ens, x0, [&steer](double t) { return steer(t); }, 1.0, 2048);
  CHECK((end - xf).norm() <= 1e-8);
}

TEST_CASE("transport cost identities") {
  const auto brown = ebridge::ensemble_from_json(R"({"family":"brownian"})");
  Vector zero(1), two(1), one(1);
  zero << 0.0;
  two << 2.0;
  one << 1.0;
  CHECK(ebridge::transport_cost(brown, zero, two, 1.0) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(ebridge::transport_cost(brown, one, one, 1.0) == doctest::Approx(0.0).epsilon(1e-12));

  const auto ens = ebridge::ensemble_from_json(R"({"family":"scalar_theta_drift"})");
  const auto rule = ebridge::gauss_legendre_01(16);
  const auto phi = [&rule](double gap) {
    double acc = 0.0;
    for (size_t q = 0; q < rule.nodes.size(); ++q)
      acc += rule.weights[q] * std::exp(rule.nodes[q] * gap);
    return acc;
  };
  const double g_simpson =
      oracles::simpson([&phi](double sigma) { return phi(sigma) * phi(sigma); }, 0.0, 1.0, 4000);
  const double want = 0.5 / g_simpson;
  CHECK(ebridge::transport_cost(ens, zero, one, 1.0) == doctest::Approx(want).epsilon(1e-6));
}

TEST_CASE("singular gramian is reported, not inverted") {
  const auto rank_def = ebridge::ensemble_from_json(R"({"family":"rank_deficient_input"})");
  Vector x0(2), xf(2);
  x0 << 0.0, 0.0;
  xf << 0.0, 1.0;
  try {
    ebridge::deterministic_steer(rank_def, x0, xf, 1.0);
    FAIL("expected singular_gramian");
  } catch (const ebridge::Error& e) {
    CHECK(e.code() == ebridge::ErrorCode::singular_gramian);
    CHECK(std::string(e.what()).find("min_eig") != std::string::npos);
  }
  CHECK_THROWS_AS(ebridge::transport_cost(rank_def, x0, xf, 1.0), ebridge::Error);
}

TEST_CASE("brownian transition density closed forms") {
  Vector x(1), y(1);
  x << 0.0;
  y << 0.0;
  CHECK(ebridge::density_brownian(0.0, x, 1.0, y) ==
        doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-14));
  y << 1.0;
  CHECK(ebridge::density_brownian(0.5, x, 1.0, y) ==
        doctest::Approx(std::exp(-1.0) / std::sqrt(M_PI)).epsilon(1e-14));
  CHECK_THROWS_AS(ebridge::density_brownian(1.0, x, 1.0, y), ebridge::Error);

  Vector x2(2), y2(2);
  x2 << 0.3, -0.2;
  y2 << -0.1, 0.4;
  const double prod = ebridge::density_brownian(0.0, x2.head(1), 0.7, y2.head(1)) *
                      ebridge::density_brownian(0.0, x2.tail(1), 0.7, y2.tail(1));
  CHECK(ebridge::density_brownian(0.0, x2, 0.7, y2) == doctest::Approx(prod).epsilon(1e-13));
}

TEST_CASE("gramian density reduces to the brownian kernel for the brownian family") {
  for (int d : {1, 2}) {
    const auto ens = ebridge::ensemble_from_json(
        std::string(R"({"family":"brownian","dim":)") + std::to_string(d) + "}");
    Vector x(d), y(d);
    for (int c = 0; c < d; ++c) {
      x[c] = 0.3 * (c + 1);
      y[c] = -0.2 + 0.5 * c;
    }
    for (auto [s, t] : {std::pair{0.0, 1.0}, {0.2, 0.9}, {0.0, 0.35}}) {
      const double got = ebridge::density_gramian(ens, 1.0, s, x, t, y);
      const double want = ebridge::density_brownian(s, x, t, y);
      CHECK(got == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("gramian density is a probability density in y") {
  const auto ens = ebridge::ensemble_from_json(R"({"family":"scalar_theta_drift"})");
  const double eps = 0.5, s = 0.0, t = 1.0;
  Vector x(1);
  x << 0.4;
  const double g = ebridge::gramian(ens, t, s)(0, 0);
  const double mean = ens.averaged_exp(t - s)(0, 0) * x[0];
  const double sd = std::sqrt(eps * g);
  const double mass = oracles::simpson(
      [&](double yv) {
        Vector y(1);
        y << yv;
        return ebridge::density_gramian(ens, eps, s, x, t, y, 32);
      },
      mean - 10.0 * sd, mean + 10.0 * sd, 800);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));

  CHECK_THROWS_AS(ebridge::density_gramian(ens, 0.0, s, x, t, x), ebridge::Error);
  const auto rank_def = ebridge::ensemble_from_json(R"({"family":"rank_deficient_input"})");
  Vector x2 = Vector::Zero(2);
  CHECK_THROWS_AS(ebridge::density_gramian(rank_def, 1.0, 0.0, x2, 1.0, x2), ebridge::Error);
}
