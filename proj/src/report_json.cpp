#include "ebridge/report_json.hpp"

#include <cmath>

#include <json.hpp>

namespace ebridge {

namespace {

using json = nlohmann::ordered_json;

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

std::string dump(const json& j, int indent) { return j.dump(indent) + "\n"; }

}  // namespace

std::string controllability_json(const ControllabilityReport& report, double time_refinement_delta,
                                 int indent) {
  json j;
  j["invertible"] = report.invertible;
  if (std::isfinite(report.cond))
    j["cond"] = report.cond;
  else
    j["cond"] = nullptr;
  j["min_eig"] = report.min_eig;
  j["max_eig"] = report.max_eig;
  j["threshold"] = report.threshold;
  j["time_refinement_delta"] = time_refinement_delta;
  return dump(j, indent);
}

std::string endpoint_stats_json(const EndpointStats& stats, int indent) {
  json j;
  j["n_paths"] = stats.n_paths;
  j["base_seed"] = stats.base_seed;
  j["endpoint_error_q50"] = stats.q50;
  j["endpoint_error_q90"] = stats.q90;
  j["endpoint_error_q99"] = stats.q99;
  j["mean_endpoint"] = vector_to_json(stats.mean_endpoint);
  j["endpoint_stderr"] = vector_to_json(stats.endpoint_stderr);
  j["running_cost_mean"] = stats.running_cost_mean;
  j["running_cost_stderr"] = stats.running_cost_stderr;
  j["penalized_cost_mean"] = stats.penalized_cost_mean;
  j["penalized_cost_stderr"] = stats.penalized_cost_stderr;
  return dump(j, indent);
}

std::string convergence_json(const ConvergenceReport& report, int indent) {
  json j;
  j["reference_k"] = report.reference_k;
  j["excluded_tail_steps"] = report.excluded_tail_steps;
  j["n_paths"] = report.n_paths;
  j["base_seed"] = report.base_seed;
  json cells = json::array();
  const double root_n = std::sqrt(static_cast<double>(report.n_paths));
  for (const ConvergenceCell& cell : report.cells) {
    json c;
    c["penalty_a"] = cell.penalty_a;
    c["steps_k"] = cell.steps_k;
    c["mean_sq_distance"] = cell.mean_sq_distance;
    c["std"] = cell.se * root_n;
    c["stderr"] = cell.se;
    cells.push_back(c);
  }
  j["cells"] = cells;
  return dump(j, indent);
}

std::string gains_meta_json(const ControllerGains& gains, int indent) {
  const int k = gains.steps();
  json j;
  j["steps_k"] = k;
  j["dt"] = gains.dt();
  j["t_f"] = gains.t_f();
  j["state_dim"] = gains.state_dim();
  j["input_dim"] = gains.input_dim();
  j["n_open_loop"] = k;
  j["n_gain_blocks"] = static_cast<long long>(k) * (k - 1) / 2;
  j["target"] = vector_to_json(gains.target());
  json grid = json::array(), v_norm = json::array();
  json kmin = json::array(), kmax = json::array(), kcond = json::array();
  for (int i = 0; i < k; ++i) {
    grid.push_back(i * gains.dt());
    v_norm.push_back(gains.open_loop(i).norm());
    kmin.push_back(gains.kernel_min_eig(i));
    kmax.push_back(gains.kernel_max_eig(i));
    kcond.push_back(gains.kernel_max_eig(i) / gains.kernel_min_eig(i));
  }
  j["grid"] = grid;
  j["open_loop_norm"] = v_norm;
  j["kernel_min_eig"] = kmin;
  j["kernel_max_eig"] = kmax;
  j["kernel_cond"] = kcond;
  return dump(j, indent);
}

}  // namespace ebridge
