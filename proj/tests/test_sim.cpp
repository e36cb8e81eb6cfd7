#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <doctest.h>

#include "ebridge/control_law.hpp"
#include "ebridge/error.hpp"
#include "ebridge/families.hpp"
#include "ebridge/sim.hpp"

using ebridge::BridgeProblem;
using ebridge::EnsembleNode;
using ebridge::EnsembleSpec;
using ebridge::Matrix;
using ebridge::NoisePath;
using ebridge::SimulationRecord;
using ebridge::Vector;

namespace {

EnsembleSpec family(const std::string& json) { return ebridge::ensemble_from_json(json); }

Vector vec(std::initializer_list<double> vals) {
  Vector v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}

BridgeProblem problem(Vector x0, Vector xf, double t_f, double eps, double a, int k) {
  BridgeProblem p;
  p.x0 = std::move(x0);
  p.xf = std::move(xf);
  p.t_f = t_f;
  p.eps = eps;
  p.penalty_a = a;
  p.steps_k = k;
  return p;
}

std::string thrown_message(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ebridge::Error& e) {
    return e.what();
  }
  return "";
}

double max_abs(const Vector& v) { return v.cwiseAbs().maxCoeff(); }

double max_record_gap(const SimulationRecord& a, const SimulationRecord& b) {
  double gap = 0.0;
  for (size_t i = 0; i < a.averaged.size(); ++i) gap = std::max(gap, max_abs(a.averaged[i] - b.averaged[i]));
  for (size_t i = 0; i < a.control.size(); ++i) gap = std::max(gap, max_abs(a.control[i] - b.control[i]));
  return gap;
}

}  // namespace

TEST_CASE("markov feedback on the brownian family has the closed-form trajectory") {
  const EnsembleSpec ens = family(R"({"family": "brownian"})");
  const int k = 64;
  const BridgeProblem prob = problem(vec({0.0}), vec({0.0}), 1.0, 1.0, 1.0, k);
  const auto law = ebridge::make_markov_law(ens, prob);
  const NoisePath noise(3, k, prob.dt(), 1);
  const SimulationRecord rec = ebridge::simulate_ensemble(ens, prob, *law, noise);

  REQUIRE(static_cast<int>(rec.averaged.size()) == k + 1);
  // One cancellation per step leaves x_i = (t_f - t_i) sum_{j<i} dW_j / (t_f - t_{j+1}).
  for (int i = 0; i < k; ++i) {
    double s = 0.0;
    for (int j = 0; j < i; ++j) s += noise.increment(j)[0] / (1.0 - (j + 1) * prob.dt());
    const double closed = (1.0 - i * prob.dt()) * s;
    CHECK(std::abs(rec.averaged[i][0] - closed) <= 1e-12);
  }
  // The final increment arrives after the last control and survives untouched.
  CHECK(std::abs(rec.averaged[k][0] - noise.increment(k - 1)[0]) <= 1e-13);
}

TEST_CASE("euler and held-input recursions coincide for the brownian family") {
  const EnsembleSpec ens = family(R"({"family": "brownian", "dim": 2})");
  const int k = 32;
  const BridgeProblem prob = problem(vec({0.4, -0.2}), vec({0.0, 0.0}), 1.0, 1.0, 1e4, k);
  const auto law = ebridge::make_discrete_law(ens, prob);
  const NoisePath noise(7, k, prob.dt(), 2);

  const SimulationRecord euler = ebridge::simulate_ensemble(ens, prob, *law, noise);
  const SimulationRecord exact = ebridge::simulate_average(ens, prob, *law, noise);

  REQUIRE(euler.node_states.size() == 1);
  REQUIRE(euler.node_states[0].size() == static_cast<size_t>(k + 1));
  CHECK(exact.node_states.empty());
  REQUIRE(euler.control.size() == static_cast<size_t>(k));
  REQUIRE(euler.noise.size() == static_cast<size_t>(k));
  CHECK(max_record_gap(euler, exact) == 0.0);
  for (int i = 0; i <= k; ++i)
    CHECK(max_abs(euler.node_states[0][i] - euler.averaged[i]) == 0.0);
}

TEST_CASE("identical nodes stay identical under the shared path") {
  Matrix a(1, 1), b(1, 1);
  a << 0.25;
  b << 1.0;
  std::vector<EnsembleNode> nodes(2);
  nodes[0] = {0.25, 0.5, a, b};
  nodes[1] = {0.75, 0.5, a, b};
  const EnsembleSpec ens(1, 1, nodes);

  const int k = 16;
  const BridgeProblem prob = problem(vec({0.3}), vec({-0.2}), 1.0, 1.0, 100.0, k);
  const auto law = ebridge::make_discrete_law(ens, prob);
  const NoisePath noise(9, k, prob.dt(), 1);
  const SimulationRecord rec = ebridge::simulate_ensemble(ens, prob, *law, noise);

  REQUIRE(rec.node_states.size() == 2);
  for (int i = 0; i <= k; ++i) {
    CHECK(max_abs(rec.node_states[0][i] - rec.node_states[1][i]) == 0.0);
    CHECK(max_abs(rec.averaged[i] - rec.node_states[0][i]) == 0.0);
  }
}

TEST_CASE("same seed reproduces the record bit for bit") {
  const EnsembleSpec ens = family(R"({"family": "brownian"})");
  const int k = 16;
  const BridgeProblem prob = problem(vec({0.5}), vec({0.0}), 1.0, 1.0, 1.0, k);
  const auto law = ebridge::make_markov_law(ens, prob);

  const NoisePath n1(42, k, prob.dt(), 1);
  const NoisePath n2(42, k, prob.dt(), 1);
  const SimulationRecord r1 = ebridge::simulate_ensemble(ens, prob, *law, n1);
  const SimulationRecord r2 = ebridge::simulate_ensemble(ens, prob, *law, n2);
  CHECK(max_record_gap(r1, r2) == 0.0);
  CHECK(r1.running_cost == r2.running_cost);
  CHECK(r1.penalized_cost == r2.penalized_cost);

  const NoisePath n3(43, k, prob.dt(), 1);
  const SimulationRecord r3 = ebridge::simulate_ensemble(ens, prob, *law, n3);
  CHECK(max_record_gap(r1, r3) > 0.0);
}

TEST_CASE("endpoint statistics are independent of the thread count") {
  const EnsembleSpec ens = family(R"({"family": "scalar_theta_drift"})");
  const BridgeProblem prob = problem(vec({0.3}), vec({-0.7}), 1.0, 1.0, 100.0, 32);
  const auto law = ebridge::make_discrete_law(ens, prob);

  const auto s1 = ebridge::verify_endpoint(ens, prob, *law, 201, 7, 1);
  const auto s4 = ebridge::verify_endpoint(ens, prob, *law, 201, 7, 4);
  const auto s0 = ebridge::verify_endpoint(ens, prob, *law, 201, 7, 0);

  CHECK(s1.q50 == s4.q50);
  CHECK(s1.q90 == s4.q90);
  CHECK(s1.q99 == s4.q99);
  CHECK(max_abs(s1.mean_endpoint - s4.mean_endpoint) == 0.0);
  CHECK(max_abs(s1.endpoint_stderr - s4.endpoint_stderr) == 0.0);
  CHECK(s1.running_cost_mean == s4.running_cost_mean);
  CHECK(s1.running_cost_stderr == s4.running_cost_stderr);
  CHECK(s1.penalized_cost_mean == s4.penalized_cost_mean);
  CHECK(s1.penalized_cost_stderr == s4.penalized_cost_stderr);
  CHECK(s1.q50 == s0.q50);
  CHECK(s1.penalized_cost_mean == s0.penalized_cost_mean);
  CHECK(s1.n_paths == 201);
  CHECK(s1.base_seed == 7);
}

TEST_CASE("uncontrolled endpoint spread matches the noise scale") {
  const EnsembleSpec ens = family(R"({"family": "brownian"})");
  const int n = 100000;
  const BridgeProblem prob = problem(vec({0.0}), vec({0.0}), 1.0, 1.0, 2.0, 4);
  const auto law = ebridge::make_zero_law(1);
  const auto stats = ebridge::verify_endpoint(ens, prob, *law, n, 11);

  // |x_k| is |N(0, eps t_f)|; the running cost is identically zero.
  CHECK(stats.running_cost_mean == 0.0);
  CHECK(stats.running_cost_stderr == 0.0);
  CHECK(std::abs(stats.q50 - 0.67449) < 0.012);
  CHECK(std::abs(stats.q90 - 1.64485) < 0.04);
  CHECK(std::abs(stats.q99 - 2.57583) < 0.09);
  CHECK(std::abs(stats.mean_endpoint[0]) <= 4.0 * stats.endpoint_stderr[0]);

  // Sample variance of x(t_f) against eps * t_f, three standard errors.
  const double var = stats.endpoint_stderr[0] * stats.endpoint_stderr[0] * n;
  CHECK(std::abs(var - 1.0) <= 3.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(stats.penalized_cost_mean - 2.0) < 0.05);
}

TEST_CASE("costs recompute from the stored trajectory") {
  const EnsembleSpec ens = family(R"({"family": "scalar_theta_drift"})");
  const int k = 32;
  const BridgeProblem prob = problem(vec({0.3}), vec({-0.7}), 1.0, 1.0, 7.5, k);
  const auto law = ebridge::make_discrete_law(ens, prob);
  const NoisePath noise(23, k, prob.dt(), 1);
  const SimulationRecord rec = ebridge::simulate_average(ens, prob, *law, noise);

  double running = 0.0;
  for (const Vector& u : rec.control) running += 0.5 * u.squaredNorm() * prob.dt();
  const double gap = (rec.averaged.back() - prob.xf).norm();
  CHECK(rec.running_cost == doctest::Approx(running).epsilon(1e-12));
  CHECK(rec.penalized_cost ==
        doctest::Approx(running + prob.penalty_a * gap * gap).epsilon(1e-12));
  CHECK(rec.endpoint_error == doctest::Approx(gap).epsilon(1e-14));

  const auto [run2, pen2] = ebridge::evaluate_cost(rec, prob);
  CHECK(run2 == doctest::Approx(rec.running_cost).epsilon(1e-14));
  CHECK(pen2 == doctest::Approx(rec.penalized_cost).epsilon(1e-14));

  SimulationRecord empty;
  CHECK_THROWS_AS(ebridge::evaluate_cost(empty, prob), ebridge::Error);
}

TEST_CASE("constant unit control accumulates half its horizon as cost") {
  const EnsembleSpec ens = family(R"({"family": "brownian"})");
  const int k = 16;
  const BridgeProblem prob = problem(vec({0.0}), vec({1.0}), 1.0, 0.0, 1.0, k);
  const auto law = ebridge::make_deterministic_law(ens, prob);
  const NoisePath noise(1, k, prob.dt(), 1);
  const SimulationRecord rec = ebridge::simulate_average(ens, prob, *law, noise);

  for (const Vector& u : rec.control) CHECK(std::abs(u[0] - 1.0) <= 1e-12);
  CHECK(std::abs(rec.running_cost - 0.5) <= 1e-12);
  CHECK(rec.endpoint_error <= 1e-12);

  // No control, no displacement, no cost.
  const BridgeProblem rest = problem(vec({0.5}), vec({0.5}), 1.0, 0.0, 1.0, k);
  const auto zero = ebridge::make_zero_law(1);
  const SimulationRecord r0 = ebridge::simulate_average(ens, rest, *zero, noise);
  CHECK(r0.running_cost == 0.0);
  CHECK(r0.penalized_cost == 0.0);
  CHECK(r0.endpoint_error == 0.0);
}

TEST_CASE("deterministic steering cost converges to the transport cost") {
  const EnsembleSpec ens = family(R"({"family": "scalar_theta_drift"})");
  const Vector x0 = vec({0.3}), xf = vec({-0.7});
  const double transport = ebridge::transport_cost(ens, x0, xf, 1.0);
  REQUIRE(transport > 0.1);

  const int k = 1 << 17;
  const BridgeProblem prob = problem(x0, xf, 1.0, 0.0, 1.0, k);
  const auto law = ebridge::make_deterministic_law(ens, prob);
  const NoisePath noise(1, k, prob.dt(), 1);
  const SimulationRecord rec = ebridge::simulate_average(ens, prob, *law, noise);
  CHECK(std::abs(rec.running_cost - transport) <= 1e-5 * transport);
}

TEST_CASE("divergence is reported with the failing step") {
  const EnsembleSpec ens = family(R"({"family": "shifted_drift", "shift": 1e155})");
  const BridgeProblem prob = problem(vec({1.0}), vec({0.0}), 4.0, 0.0, 1.0, 4);
  const auto law = ebridge::make_zero_law(1);
  const NoisePath noise(1, 4, prob.dt(), 1);

  CHECK_THROWS_AS(ebridge::simulate_ensemble(ens, prob, *law, noise), ebridge::Error);
  const std::string msg =
      thrown_message([&] { ebridge::simulate_ensemble(ens, prob, *law, noise); });
  CHECK(msg.find("diverged") != std::string::npos);
  CHECK(msg.find("step 2") != std::string::npos);
  try {
    ebridge::simulate_ensemble(ens, prob, *law, noise);
  } catch (const ebridge::Error& e) {
    CHECK(e.code() == ebridge::ErrorCode::divergence);
  }
}

TEST_CASE("simulation inputs are cross-checked") {
  const EnsembleSpec ens = family(R"({"family": "scalar_theta_drift"})");
  const int k = 16;
  const BridgeProblem prob = problem(vec({0.0}), vec({1.0}), 1.0, 0.0, 1.0, k);
  const NoisePath good(1, k, prob.dt(), 1);

  const auto wide = ebridge::make_zero_law(2);
  CHECK(thrown_message([&] { ebridge::simulate_ensemble(ens, prob, *wide, good); })
            .find("input dimension") != std::string::npos);

  const auto law = ebridge::make_zero_law(1);
  const NoisePath short_path(1, k / 2, prob.dt(), 1);
  CHECK(thrown_message([&] { ebridge::simulate_ensemble(ens, prob, *law, short_path); })
            .find("problem expects") != std::string::npos);

  const NoisePath coarse(1, k, 2.0 * prob.dt(), 1);
  CHECK(thrown_message([&] { ebridge::simulate_ensemble(ens, prob, *law, coarse); })
            .find("step size") != std::string::npos);

  const NoisePath wide_noise(1, k, prob.dt(), 2);
  CHECK_THROWS_AS(ebridge::simulate_ensemble(ens, prob, *law, wide_noise), ebridge::Error);

  CHECK(thrown_message([&] { ebridge::verify_endpoint(ens, prob, *law, 0, 1); })
            .find("path count") != std::string::npos);
}

TEST_CASE("convergence study rejects malformed grids") {
  const EnsembleSpec ens = family(R"({"family": "brownian"})");
  const BridgeProblem prob = problem(vec({0.0}), vec({0.0}), 1.0, 1.0, 1.0, 64);
  auto run = [&](std::vector<double> a, std::vector<int> k, int n) {
    ebridge::convergence_study(ens, prob, a, k, n, 1);
  };

  CHECK(thrown_message([&] { run({}, {16, 64}, 10); }).find("at least one") != std::string::npos);
  CHECK(thrown_message([&] { run({-1.0}, {16, 64}, 10); }).find("positive") != std::string::npos);
  CHECK(thrown_message([&] { run({1e2}, {0, 64}, 10); }).find("positive") != std::string::npos);
  CHECK(thrown_message([&] { run({1e2}, {16, 64}, 1); }).find("two paths") != std::string::npos);
  CHECK(thrown_message([&] { run({1e2}, {8}, 10); }).find("terminal window") != std::string::npos);
  CHECK(thrown_message([&] { run({1e2}, {48, 512}, 10); }).find("does not divide") !=
        std::string::npos);
}

TEST_CASE("a small study fills its grid deterministically") {
  const EnsembleSpec ens = family(R"({"family": "brownian"})");
  const BridgeProblem prob = problem(vec({0.5}), vec({0.0}), 1.0, 1.0, 1.0, 64);
  const std::vector<double> a_list{1e2, 1e6};
  const std::vector<int> k_list{16, 64};

  const auto r1 = ebridge::convergence_study(ens, prob, a_list, k_list, 40, 3, 1);
  const auto r3 = ebridge::convergence_study(ens, prob, a_list, k_list, 40, 3, 3);

  REQUIRE(r1.cells.size() == 4);
  CHECK(r1.reference_k == 64);
  CHECK(r1.excluded_tail_steps == 10);
  CHECK(r1.n_paths == 40);
  CHECK(r1.cells[0].penalty_a == 1e2);
  CHECK(r1.cells[0].steps_k == 16);
  CHECK(r1.cells[1].steps_k == 64);
  CHECK(r1.cells[2].penalty_a == 1e6);
  for (size_t i = 0; i < 4; ++i) {
    CHECK(r1.cells[i].mean_sq_distance >= 0.0);
    CHECK(r1.cells[i].se >= 0.0);
    CHECK(r1.cells[i].mean_sq_distance == r3.cells[i].mean_sq_distance);
    CHECK(r1.cells[i].se == r3.cells[i].se);
  }
}
