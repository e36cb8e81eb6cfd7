#include "ensemble_bridge.h"

#include <cstring>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ebridge/bridge.hpp"
#include "ebridge/control_law.hpp"
#include "ebridge/error.hpp"
#include "ebridge/families.hpp"
#include "ebridge/gramian.hpp"
#include "ebridge/report_json.hpp"
#include "ebridge/sim.hpp"

struct eb_ensemble {
  ebridge::EnsembleSpec spec;
};

struct eb_controller {
  eb_controller_kind kind;
  std::shared_ptr<const ebridge::ControlLaw> law;
  std::optional<ebridge::ControllerGains> gains;  // discrete kind only
  ebridge::BridgeProblem prob;                    // problem the law was built against
};

struct eb_record {
  ebridge::SimulationRecord rec;
};

namespace {

thread_local std::string g_last_error;

eb_status failure(eb_status st, const std::string& msg) {
  g_last_error = msg;
  return st;
}

eb_status from_exception() {
  try {
    throw;
  } catch (const ebridge::Error& e) {
    g_last_error = e.what();
    switch (e.code()) {
      case ebridge::ErrorCode::invalid_input:
        return EB_ERR_INVALID_INPUT;
      case ebridge::ErrorCode::singular_gramian:
        return EB_ERR_SINGULAR_GRAMIAN;
      case ebridge::ErrorCode::divergence:
        return EB_ERR_DIVERGENCE;
    }
    return EB_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return EB_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return EB_ERR_INTERNAL;
  }
}

template <typename Fn>
eb_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (...) {
    return from_exception();
  }
}

eb_status require(bool ok, const std::string& msg) {
  return ok ? EB_OK : failure(EB_ERR_INVALID_INPUT, msg);
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ebridge::BridgeProblem to_problem(const eb_problem& p, int state_dim) {
  ebridge::BridgeProblem prob;
  prob.x0 = Eigen::Map<const ebridge::Vector>(p.x0, state_dim);
  prob.xf = Eigen::Map<const ebridge::Vector>(p.xf, state_dim);
  prob.t_f = p.t_f;
  prob.eps = p.eps;
  prob.penalty_a = p.penalty_a;
  prob.steps_k = p.steps_k;
  return prob;
}

bool same_problem(const ebridge::BridgeProblem& a, const ebridge::BridgeProblem& b) {
  return a.t_f == b.t_f && a.eps == b.eps && a.penalty_a == b.penalty_a &&
         a.steps_k == b.steps_k && a.x0 == b.x0 && a.xf == b.xf;
}

}  // namespace

extern "C" {

const char* eb_version(void) { return "0.1.0"; }

const char* eb_last_error(void) { return g_last_error.c_str(); }

void eb_string_free(char* s) { delete[] s; }

eb_status eb_ensemble_from_json(const char* json_text, eb_ensemble** out) {
  if (eb_status st = require(json_text && out, "eb_ensemble_from_json: null argument")) return st;
  *out = nullptr;
  return guarded([&] {
    *out = new eb_ensemble{ebridge::ensemble_from_json(json_text)};
    return EB_OK;
  });
}

void eb_ensemble_free(eb_ensemble* ens) { delete ens; }

int eb_ensemble_state_dim(const eb_ensemble* ens) { return ens ? ens->spec.state_dim() : 0; }

int eb_ensemble_input_dim(const eb_ensemble* ens) { return ens ? ens->spec.input_dim() : 0; }

int eb_ensemble_node_count(const eb_ensemble* ens) {
  return ens ? static_cast<int>(ens->spec.nodes().size()) : 0;
}

eb_status eb_check_controllability(const eb_ensemble* ens, double t_f,
                                   eb_controllability_report* out) {
  if (eb_status st = require(ens && out, "eb_check_controllability: null argument")) return st;
  return guarded([&] {
    const ebridge::ControllabilityReport rep = ebridge::check_avg_controllability(ens->spec, t_f);
    out->invertible = rep.invertible ? 1 : 0;
    out->cond = rep.cond;
    out->min_eig = rep.min_eig;
    out->max_eig = rep.max_eig;
    out->threshold = rep.threshold;
    return EB_OK;
  });
}

eb_status eb_check_controllability_json(const eb_ensemble* ens, double t_f, char** out_json) {
  if (eb_status st = require(ens && out_json, "eb_check_controllability_json: null argument"))
    return st;
  *out_json = nullptr;
  return guarded([&] {
    const ebridge::ControllabilityReport rep = ebridge::check_avg_controllability(ens->spec, t_f);
    const ebridge::Matrix coarse = ebridge::gramian(ens->spec, t_f, 0.0);
    const ebridge::Matrix fine = ebridge::gramian(ens->spec, t_f, 0.0, 2 * ebridge::kDefaultTimePanels);
    const double base = fine.norm();
    const double delta = base > 0.0 ? (coarse - fine).norm() / base : 0.0;
    *out_json = copy_string(ebridge::controllability_json(rep, delta));
    return EB_OK;
  });
}

eb_status eb_gramian(const eb_ensemble* ens, double t, double s, int n_panels, double* out) {
  if (eb_status st = require(ens && out, "eb_gramian: null argument")) return st;
  return guarded([&] {
    const int panels = n_panels > 0 ? n_panels : ebridge::kDefaultTimePanels;
    const ebridge::Matrix g = ebridge::gramian(ens->spec, t, s, panels);
    for (int r = 0; r < g.rows(); ++r)
      for (int c = 0; c < g.cols(); ++c) out[r * g.cols() + c] = g(r, c);
    return EB_OK;
  });
}

eb_status eb_transport_cost(const eb_ensemble* ens, const double* x0, const double* xf, double t_f,
                            double* out) {
  if (eb_status st = require(ens && x0 && xf && out, "eb_transport_cost: null argument")) return st;
  return guarded([&] {
    const int d = ens->spec.state_dim();
    const ebridge::Vector v0 = Eigen::Map<const ebridge::Vector>(x0, d);
    const ebridge::Vector vf = Eigen::Map<const ebridge::Vector>(xf, d);
    *out = ebridge::transport_cost(ens->spec, v0, vf, t_f);
    return EB_OK;
  });
}

eb_status eb_density_brownian(int dim, double s, const double* x, double t, const double* y,
                              double* out) {
  if (eb_status st = require(x && y && out, "eb_density_brownian: null argument")) return st;
  if (eb_status st = require(dim >= 1, "eb_density_brownian: dimension must be positive")) return st;
  return guarded([&] {
    const ebridge::Vector vx = Eigen::Map<const ebridge::Vector>(x, dim);
    const ebridge::Vector vy = Eigen::Map<const ebridge::Vector>(y, dim);
    *out = ebridge::density_brownian(s, vx, t, vy);
    return EB_OK;
  });
}

eb_status eb_density_gramian(const eb_ensemble* ens, double eps, double s, const double* x,
                             double t, const double* y, double* out) {
  if (eb_status st = require(ens && x && y && out, "eb_density_gramian: null argument")) return st;
  return guarded([&] {
    const int d = ens->spec.state_dim();
    const ebridge::Vector vx = Eigen::Map<const ebridge::Vector>(x, d);
    const ebridge::Vector vy = Eigen::Map<const ebridge::Vector>(y, d);
    *out = ebridge::density_gramian(ens->spec, eps, s, vx, t, vy);
    return EB_OK;
  });
}

eb_status eb_controller_create(const eb_ensemble* ens, const eb_problem* prob,
                               eb_controller_kind kind, eb_controller** out) {
  if (eb_status st = require(ens && prob && out, "eb_controller_create: null argument")) return st;
  if (eb_status st = require(prob->x0 && prob->xf, "eb_controller_create: null state pointer"))
    return st;
  *out = nullptr;
  return guarded([&] {
    const ebridge::BridgeProblem p = to_problem(*prob, ens->spec.state_dim());
    auto ctl = std::make_unique<eb_controller>();
    ctl->kind = kind;
    ctl->prob = p;
    switch (kind) {
      case EB_CONTROLLER_NONE:
        p.validate(ens->spec);
        ctl->law = ebridge::make_zero_law(ens->spec.input_dim());
        break;
      case EB_CONTROLLER_DETERMINISTIC:
        ctl->law = ebridge::make_deterministic_law(ens->spec, p);
        break;
      case EB_CONTROLLER_DISCRETE:
        ctl->gains = ebridge::ControllerGains::synthesize(ens->spec, p);
        ctl->law = ebridge::make_discrete_law(ens->spec, p);
        break;
      case EB_CONTROLLER_CONTINUOUS:
        ctl->law = ebridge::make_continuous_law(ens->spec, p);
        break;
      case EB_CONTROLLER_MARKOV:
        ctl->law = ebridge::make_markov_law(ens->spec, p);
        break;
      default:
        return failure(EB_ERR_INVALID_INPUT, "eb_controller_create: unknown controller kind");
    }
    *out = ctl.release();
    return EB_OK;
  });
}

void eb_controller_free(eb_controller* ctl) { delete ctl; }

eb_status eb_controller_gains_meta_json(const eb_controller* ctl, char** out_json) {
  if (eb_status st = require(ctl && out_json, "eb_controller_gains_meta_json: null argument"))
    return st;
  if (eb_status st = require(ctl->gains.has_value(),
                             "eb_controller_gains_meta_json: controller has no discrete gains"))
    return st;
  *out_json = nullptr;
  return guarded([&] {
    *out_json = copy_string(ebridge::gains_meta_json(*ctl->gains));
    return EB_OK;
  });
}

eb_status eb_controller_gain(const eb_controller* ctl, int i, int j, double* out) {
  if (eb_status st = require(ctl && out, "eb_controller_gain: null argument")) return st;
  if (eb_status st =
          require(ctl->gains.has_value(), "eb_controller_gain: controller has no discrete gains"))
    return st;
  return guarded([&] {
    const ebridge::Matrix g = ctl->gains->gain(i, j);
    for (int r = 0; r < g.rows(); ++r)
      for (int c = 0; c < g.cols(); ++c) out[r * g.cols() + c] = g(r, c);
    return EB_OK;
  });
}

eb_status eb_controller_open_loop(const eb_controller* ctl, int i, double* out) {
  if (eb_status st = require(ctl && out, "eb_controller_open_loop: null argument")) return st;
  if (eb_status st = require(ctl->gains.has_value(),
                             "eb_controller_open_loop: controller has no discrete gains"))
    return st;
  return guarded([&] {
    const ebridge::Vector v = ctl->gains->open_loop(i);
    for (int r = 0; r < v.size(); ++r) out[r] = v[r];
    return EB_OK;
  });
}

eb_status eb_simulate(const eb_ensemble* ens, const eb_problem* prob, const eb_controller* ctl,
                      uint64_t seed, int euler, eb_record** out) {
  if (eb_status st = require(ens && prob && ctl && out, "eb_simulate: null argument")) return st;
  if (eb_status st = require(prob->x0 && prob->xf, "eb_simulate: null state pointer")) return st;
  *out = nullptr;
  return guarded([&] {
    const ebridge::BridgeProblem p = to_problem(*prob, ens->spec.state_dim());
    if (ctl->kind != EB_CONTROLLER_NONE && !same_problem(p, ctl->prob))
      return failure(EB_ERR_INVALID_INPUT,
                     "eb_simulate: controller was synthesized for a different problem");
    const ebridge::NoisePath noise(seed, p.steps_k, p.dt(), ens->spec.input_dim());
    auto rec = std::make_unique<eb_record>();
    rec->rec = euler ? ebridge::simulate_ensemble(ens->spec, p, *ctl->law, noise)
                     : ebridge::simulate_average(ens->spec, p, *ctl->law, noise);
    *out = rec.release();
    return EB_OK;
  });
}

void eb_record_free(eb_record* rec) { delete rec; }

int eb_record_steps(const eb_record* rec) {
  return rec ? static_cast<int>(rec->rec.control.size()) : 0;
}

eb_status eb_record_state(const eb_record* rec, int step, double* out) {
  if (eb_status st = require(rec && out, "eb_record_state: null argument")) return st;
  if (eb_status st = require(step >= 0 && step < static_cast<int>(rec->rec.averaged.size()),
                             "eb_record_state: step out of range"))
    return st;
  const ebridge::Vector& x = rec->rec.averaged[step];
  for (int r = 0; r < x.size(); ++r) out[r] = x[r];
  return EB_OK;
}

eb_status eb_record_control(const eb_record* rec, int step, double* out) {
  if (eb_status st = require(rec && out, "eb_record_control: null argument")) return st;
  if (eb_status st = require(step >= 0 && step < static_cast<int>(rec->rec.control.size()),
                             "eb_record_control: step out of range"))
    return st;
  const ebridge::Vector& u = rec->rec.control[step];
  for (int r = 0; r < u.size(); ++r) out[r] = u[r];
  return EB_OK;
}

eb_status eb_record_noise(const eb_record* rec, int step, double* out) {
  if (eb_status st = require(rec && out, "eb_record_noise: null argument")) return st;
  if (eb_status st = require(step >= 0 && step < static_cast<int>(rec->rec.noise.size()),
                             "eb_record_noise: step out of range"))
    return st;
  const ebridge::Vector& w = rec->rec.noise[step];
  for (int r = 0; r < w.size(); ++r) out[r] = w[r];
  return EB_OK;
}

double eb_record_running_cost(const eb_record* rec) { return rec ? rec->rec.running_cost : 0.0; }

double eb_record_penalized_cost(const eb_record* rec) {
  return rec ? rec->rec.penalized_cost : 0.0;
}

double eb_record_endpoint_error(const eb_record* rec) {
  return rec ? rec->rec.endpoint_error : 0.0;
}

eb_status eb_verify_endpoint_json(const eb_ensemble* ens, const eb_problem* prob,
                                  const eb_controller* ctl, int n_paths, uint64_t base_seed,
                                  int threads, int euler, char** out_json) {
  if (eb_status st = require(ens && prob && ctl && out_json, "eb_verify_endpoint_json: null argument"))
    return st;
  if (eb_status st = require(prob->x0 && prob->xf, "eb_verify_endpoint_json: null state pointer"))
    return st;
  *out_json = nullptr;
  return guarded([&] {
    const ebridge::BridgeProblem p = to_problem(*prob, ens->spec.state_dim());
    if (ctl->kind != EB_CONTROLLER_NONE && !same_problem(p, ctl->prob))
      return failure(EB_ERR_INVALID_INPUT,
                     "eb_verify_endpoint_json: controller was synthesized for a different problem");
    const ebridge::EndpointStats stats = ebridge::verify_endpoint(
        ens->spec, p, *ctl->law, n_paths, base_seed, threads,
        euler ? ebridge::SimMethod::euler : ebridge::SimMethod::exact);
    *out_json = copy_string(ebridge::endpoint_stats_json(stats));
    return EB_OK;
  });
}

eb_status eb_convergence_study_json(const eb_ensemble* ens, const eb_problem* prob,
                                    const double* a_list, int n_a, const int* k_list, int n_k,
                                    int n_paths, uint64_t base_seed, int threads, char** out_json) {
  if (eb_status st =
          require(ens && prob && a_list && k_list && out_json, "eb_convergence_study_json: null argument"))
    return st;
  if (eb_status st = require(prob->x0 && prob->xf, "eb_convergence_study_json: null state pointer"))
    return st;
  if (eb_status st = require(n_a >= 1 && n_k >= 1, "eb_convergence_study_json: empty list"))
    return st;
  *out_json = nullptr;
  return guarded([&] {
    const ebridge::BridgeProblem p = to_problem(*prob, ens->spec.state_dim());
    const std::vector<double> as(a_list, a_list + n_a);
    const std::vector<int> ks(k_list, k_list + n_k);
    const ebridge::ConvergenceReport rep =
        ebridge::convergence_study(ens->spec, p, as, ks, n_paths, base_seed, threads);
    *out_json = copy_string(ebridge::convergence_json(rep));
    return EB_OK;
  });
}

}  // extern "C"
