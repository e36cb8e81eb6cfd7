#include "ebridge/sim.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "ebridge/error.hpp"
#include "ebridge/stats.hpp"

namespace ebridge {

namespace {

void check_inputs(const EnsembleSpec& ens, const BridgeProblem& prob, const ControlLaw& law,
                  const NoisePath& noise) {
  prob.validate(ens);
  if (law.input_dim() != ens.input_dim())
    fail(ErrorCode::invalid_input, "control law input dimension " + std::to_string(law.input_dim()) +
                                       " does not match ensemble input dimension " +
                                       std::to_string(ens.input_dim()));
  if (noise.steps() != prob.steps_k)
    fail(ErrorCode::invalid_input, "noise path has " + std::to_string(noise.steps()) +
                                       " steps, problem expects " + std::to_string(prob.steps_k));
  if (noise.input_dim() != ens.input_dim())
    fail(ErrorCode::invalid_input, "noise path dimension " + std::to_string(noise.input_dim()) +
                                       " does not match ensemble input dimension " +
                                       std::to_string(ens.input_dim()));
  if (std::abs(noise.dt() - prob.dt()) > 1e-9 * std::max(1.0, prob.dt()))
    fail(ErrorCode::invalid_input, "noise path step size " + std::to_string(noise.dt()) +
                                       " does not match problem step size " + std::to_string(prob.dt()));
}

[[noreturn]] void fail_divergence(int step, int k, double t) {
  fail(ErrorCode::divergence, "state diverged at step " + std::to_string(step) + " of " +
                                  std::to_string(k) + " (t = " + std::to_string(t) + ")");
}

void finish_costs(SimulationRecord& rec, const BridgeProblem& prob, const KahanSum& running) {
  const Vector gap = rec.averaged.back() - prob.xf;
  rec.running_cost = running.value();
  rec.endpoint_error = gap.norm();
  rec.penalized_cost = rec.running_cost + prob.penalty_a * gap.squaredNorm();
}

}  // namespace

SimulationRecord simulate_ensemble(const EnsembleSpec& ens, const BridgeProblem& prob,
                                   const ControlLaw& law, const NoisePath& noise) {
  check_inputs(ens, prob, law, noise);
  const int k = prob.steps_k;
  const double dt = prob.dt();
  const double sqrt_eps = std::sqrt(prob.eps);
  const auto& nodes = ens.nodes();
  const int n_nodes = static_cast<int>(nodes.size());

  SimulationRecord rec;
  rec.node_states.assign(n_nodes, {});
  for (auto& states : rec.node_states) states.reserve(k + 1);
  rec.averaged.reserve(k + 1);
  rec.control.reserve(k);
  rec.noise.reserve(k);

  std::vector<Vector> x(n_nodes, prob.x0);
  Vector averaged = prob.x0;
  auto ctl = law.start();
  KahanSum running;

  for (int i = 0; i < k; ++i) {
    for (int n = 0; n < n_nodes; ++n) rec.node_states[n].push_back(x[n]);
    rec.averaged.push_back(averaged);

    const Vector u = ctl->control(i, averaged);
    const Vector& dw = noise.increment(i);
    for (int n = 0; n < n_nodes; ++n) {
      const Vector bu = nodes[n].b * (u * dt + sqrt_eps * dw);
      x[n] += nodes[n].a * x[n] * dt + bu;
    }
    ctl->observe_noise(i, dw);

    averaged.setZero();
    for (int n = 0; n < n_nodes; ++n) averaged += nodes[n].weight * x[n];
    if (!averaged.allFinite()) fail_divergence(i + 1, k, (i + 1) * dt);

    rec.control.push_back(u);
    rec.noise.push_back(dw);
    running.add(0.5 * u.squaredNorm() * dt);
  }
  for (int n = 0; n < n_nodes; ++n) rec.node_states[n].push_back(x[n]);
  rec.averaged.push_back(averaged);
  finish_costs(rec, prob, running);
  return rec;
}

SimulationRecord simulate_average(const EnsembleSpec& ens, const BridgeProblem& prob,
                                  const ControlLaw& law, const NoisePath& noise) {
  check_inputs(ens, prob, law, noise);
  const int k = prob.steps_k;
  const double dt = prob.dt();
  const double sqrt_eps = std::sqrt(prob.eps);
  const auto& nodes = ens.nodes();
  const int n_nodes = static_cast<int>(nodes.size());

  std::vector<Matrix> step_exp(n_nodes);
  for (int n = 0; n < n_nodes; ++n) step_exp[n] = matrix_exp(nodes[n].a, dt);

  SimulationRecord rec;
  rec.averaged.reserve(k + 1);
  rec.control.reserve(k);
  rec.noise.reserve(k);

  std::vector<Vector> y(n_nodes, prob.x0);
  Vector averaged = prob.x0;
  auto ctl = law.start();
  KahanSum running;

  for (int i = 0; i < k; ++i) {
    rec.averaged.push_back(averaged);
    const Vector u = ctl->control(i, averaged);
    const Vector& dw = noise.increment(i);
    const Vector held = u * dt + sqrt_eps * dw;
    for (int n = 0; n < n_nodes; ++n) y[n] = step_exp[n] * (y[n] + nodes[n].b * held);
    ctl->observe_noise(i, dw);

    averaged.setZero();
    for (int n = 0; n < n_nodes; ++n) averaged += nodes[n].weight * y[n];
    if (!averaged.allFinite()) fail_divergence(i + 1, k, (i + 1) * dt);

    rec.control.push_back(u);
    rec.noise.push_back(dw);
    running.add(0.5 * u.squaredNorm() * dt);
  }
  rec.averaged.push_back(averaged);
  finish_costs(rec, prob, running);
  return rec;
}

std::pair<double, double> evaluate_cost(const SimulationRecord& rec, const BridgeProblem& prob) {
  if (rec.averaged.empty()) fail(ErrorCode::invalid_input, "record holds no trajectory");
  const double dt = prob.t_f / static_cast<double>(rec.control.size());
  KahanSum running;
  for (const Vector& u : rec.control) running.add(0.5 * u.squaredNorm() * dt);
  const double penalized =
      running.value() + prob.penalty_a * (rec.averaged.back() - prob.xf).squaredNorm();
  return {running.value(), penalized};
}

EndpointStats verify_endpoint(const EnsembleSpec& ens, const BridgeProblem& prob,
                              const ControlLaw& law, int n_paths, std::uint64_t base_seed,
                              int threads, SimMethod method) {
  prob.validate(ens);
  if (n_paths < 1) fail(ErrorCode::invalid_input, "path count must be positive");
  const int d = ens.state_dim();

  std::vector<double> err(n_paths), run(n_paths), pen(n_paths);
  std::vector<Vector> ends(n_paths);
  parallel_for(n_paths, threads, [&](int p) {
    const NoisePath noise(base_seed + static_cast<std::uint64_t>(p), prob.steps_k, prob.dt(),
                          ens.input_dim());
    const SimulationRecord rec = method == SimMethod::euler
                                     ? simulate_ensemble(ens, prob, law, noise)
                                     : simulate_average(ens, prob, law, noise);
    err[p] = rec.endpoint_error;
    run[p] = rec.running_cost;
    pen[p] = rec.penalized_cost;
    ends[p] = rec.averaged.back();
  });

  EndpointStats st;
  st.n_paths = n_paths;
  st.base_seed = base_seed;
  st.q50 = quantile(err, 0.50);
  st.q90 = quantile(err, 0.90);
  st.q99 = quantile(err, 0.99);
  st.mean_endpoint = Vector::Zero(d);
  st.endpoint_stderr = Vector::Zero(d);
  for (int c = 0; c < d; ++c) {
    KahanSum sum;
    for (int p = 0; p < n_paths; ++p) sum.add(ends[p][c]);
    const double m = sum.value() / n_paths;
    st.mean_endpoint[c] = m;
    if (n_paths > 1) {
      KahanSum sq;
      for (int p = 0; p < n_paths; ++p) sq.add((ends[p][c] - m) * (ends[p][c] - m));
      st.endpoint_stderr[c] = std::sqrt(sq.value() / (n_paths - 1) / n_paths);
    }
  }
  st.running_cost_mean = mean(run);
  st.running_cost_stderr = standard_error(run);
  st.penalized_cost_mean = mean(pen);
  st.penalized_cost_stderr = standard_error(pen);
  return st;
}

ConvergenceReport convergence_study(const EnsembleSpec& ens, const BridgeProblem& prob,
                                    const std::vector<double>& a_list, const std::vector<int>& k_list,
                                    int n_paths, std::uint64_t base_seed, int threads) {
  if (a_list.empty() || k_list.empty())
    fail(ErrorCode::invalid_input, "study needs at least one penalty and one step count");
  for (double a : a_list)
    if (!(a > 0.0) || !std::isfinite(a))
      fail(ErrorCode::invalid_input, "study penalties must be positive and finite");
  for (int k : k_list)
    if (k < 1) fail(ErrorCode::invalid_input, "study step counts must be positive");
  if (n_paths < 2) fail(ErrorCode::invalid_input, "study needs at least two paths");

  const int k_ref = *std::max_element(k_list.begin(), k_list.end());
  constexpr int kTailSteps = 10;
  if (k_ref <= kTailSteps)
    fail(ErrorCode::invalid_input,
         "largest step count must exceed the " + std::to_string(kTailSteps) + "-step terminal window");
  for (int k : k_list)
    if (k_ref % k != 0)
      fail(ErrorCode::invalid_input, "step count " + std::to_string(k) +
                                         " does not divide the largest step count " +
                                         std::to_string(k_ref));

  BridgeProblem fine = prob;
  fine.steps_k = k_ref;
  fine.validate(ens);
  const double dt_ref = fine.dt();
  const int window_end = k_ref - kTailSteps;
  const auto ref_law = make_continuous_law(ens, fine);

  struct Cell {
    double a;
    int k;
    std::shared_ptr<const ControlLaw> law;
  };
  std::vector<Cell> cells;
  cells.reserve(a_list.size() * k_list.size());
  for (double a : a_list)
    for (int k : k_list) {
      BridgeProblem cp = prob;
      cp.steps_k = k;
      cp.penalty_a = a;
      cells.push_back({a, k, make_discrete_law(ens, cp)});
    }

  const int m = ens.input_dim();
  const Vector zero_state = Vector::Zero(ens.state_dim());
  const int n_cells = static_cast<int>(cells.size());
  std::vector<std::vector<double>> dist(n_cells, std::vector<double>(n_paths));

  parallel_for(n_paths, threads, [&](int p) {
    const NoisePath noise(base_seed + static_cast<std::uint64_t>(p), k_ref, dt_ref, m);

    std::vector<Vector> u_ref(window_end);
    auto rctl = ref_law->start();
    for (int i = 0; i < window_end; ++i) {
      u_ref[i] = rctl->control(i, zero_state);
      rctl->observe_noise(i, noise.increment(i));
    }

    for (int c = 0; c < n_cells; ++c) {
      const int k = cells[c].k;
      const int ratio = k_ref / k;
      auto ctl = cells[c].law->start();
      KahanSum acc;
      for (int j = 0; j < k && j * ratio < window_end; ++j) {
        const Vector u = ctl->control(j, zero_state);
        const int hi = std::min((j + 1) * ratio, window_end);
        for (int i = j * ratio; i < hi; ++i) acc.add((u - u_ref[i]).squaredNorm() * dt_ref);
        Vector dw = Vector::Zero(m);
        for (int i = j * ratio; i < (j + 1) * ratio; ++i) dw += noise.increment(i);
        ctl->observe_noise(j, dw);
      }
      dist[c][p] = acc.value();
    }
  });

  ConvergenceReport rep;
  rep.reference_k = k_ref;
  rep.excluded_tail_steps = kTailSteps;
  rep.n_paths = n_paths;
  rep.base_seed = base_seed;
  rep.cells.reserve(n_cells);
  for (int c = 0; c < n_cells; ++c) {
    ConvergenceCell cell;
    cell.penalty_a = cells[c].a;
    cell.steps_k = cells[c].k;
    cell.mean_sq_distance = mean(dist[c]);
    cell.se = standard_error(dist[c]);
    rep.cells.push_back(cell);
  }
  return rep;
}

}  // namespace ebridge
