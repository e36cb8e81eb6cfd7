// Command-line front end; all numerics go through the C API of the shared library.
#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ensemble_bridge.h"

namespace {

using json = nlohmann::json;

struct CliError {
  int code;
  std::string msg;
};

int code_of(eb_status st) {
  switch (st) {
    case EB_OK:
      return 0;
    case EB_ERR_INVALID_INPUT:
      return 1;
    case EB_ERR_SINGULAR_GRAMIAN:
      return 2;
    case EB_ERR_DIVERGENCE:
      return 3;
    case EB_ERR_INTERNAL:
      break;
  }
  return 1;
}

void check_st(eb_status st) {
  if (st != EB_OK) throw CliError{code_of(st), eb_last_error()};
}

std::string take_string(char* s) {
  std::string out = s ? s : "";
  eb_string_free(s);
  return out;
}

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError{1, "cannot open config file " + path};
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw CliError{1, std::string("config parse: ") + e.what()};
  }
}

const json& need(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw CliError{1, "config: " + where + " must live in a JSON object"};
  const auto it = obj.find(key);
  if (it == obj.end()) throw CliError{1, "config: " + where + " is required"};
  return *it;
}

double as_double(const json& j, const std::string& where) {
  if (!j.is_number()) throw CliError{1, "config: " + where + " must be a number"};
  return j.get<double>();
}

int as_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw CliError{1, "config: " + where + " must be an integer"};
  return j.get<int>();
}

std::vector<double> as_vector(const json& j, int expect, const std::string& where) {
  if (!j.is_array()) throw CliError{1, "config: " + where + " must be an array of numbers"};
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(as_double(e, where));
  if (expect >= 0 && static_cast<int>(out.size()) != expect)
    throw CliError{1, "config: " + where + " must hold " + std::to_string(expect) + " entries, got " +
                          std::to_string(out.size())};
  return out;
}

struct EnsembleHandle {
  eb_ensemble* ptr = nullptr;
  ~EnsembleHandle() { eb_ensemble_free(ptr); }
};

struct ControllerHandle {
  eb_controller* ptr = nullptr;
  ~ControllerHandle() { eb_controller_free(ptr); }
};

void build_ensemble(const json& cfg, EnsembleHandle& ens) {
  const std::string text = need(cfg, "ensemble", "ensemble").dump();
  check_st(eb_ensemble_from_json(text.c_str(), &ens.ptr));
}

struct ProblemData {
  std::vector<double> x0, xf;
  eb_problem p{};
};

ProblemData parse_problem(const json& cfg, int state_dim) {
  const json& pj = need(cfg, "problem", "problem");
  ProblemData out;
  out.x0 = as_vector(need(pj, "x0", "problem.x0"), state_dim, "problem.x0");
  out.xf = as_vector(need(pj, "xf", "problem.xf"), state_dim, "problem.xf");
  out.p.x0 = out.x0.data();
  out.p.xf = out.xf.data();
  out.p.t_f = as_double(need(pj, "t_f", "problem.t_f"), "problem.t_f");
  out.p.steps_k = as_int(need(pj, "steps_k", "problem.steps_k"), "problem.steps_k");
  out.p.eps = pj.contains("eps") ? as_double(pj["eps"], "problem.eps") : 0.0;
  out.p.penalty_a = pj.contains("penalty_a") ? as_double(pj["penalty_a"], "problem.penalty_a") : 1.0;
  return out;
}

eb_controller_kind parse_controller(const json& cfg) {
  const json& cj = need(cfg, "controller", "controller");
  if (!cj.is_string()) throw CliError{1, "config: controller must be a string"};
  const std::string name = cj.get<std::string>();
  if (name == "none") return EB_CONTROLLER_NONE;
  if (name == "deterministic") return EB_CONTROLLER_DETERMINISTIC;
  if (name == "discrete") return EB_CONTROLLER_DISCRETE;
  if (name == "continuous") return EB_CONTROLLER_CONTINUOUS;
  if (name == "markov") return EB_CONTROLLER_MARKOV;
  throw CliError{1, "config: controller must be one of none, deterministic, discrete, continuous, markov (got \"" +
                        name + "\")"};
}

bool parse_euler(const json& cfg) {
  if (!cfg.contains("method")) return true;
  const std::string m = cfg["method"].is_string() ? cfg["method"].get<std::string>() : "";
  if (m == "euler") return true;
  if (m == "exact") return false;
  throw CliError{1, "config: method must be \"euler\" or \"exact\""};
}

struct RunOptions {
  std::string config_path;
  std::string out_dir = ".";
  bool out_given = false;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int paths = 0;
  bool paths_given = false;
  int threads = -1;  // -1: unresolved
  bool dump_gains = false;
};

std::uint64_t resolve_seed(const RunOptions& opt, const json& cfg) {
  if (opt.seed_given) return opt.seed;
  if (cfg.contains("seed")) {
    const json& s = cfg["seed"];
    if (!s.is_number_integer() && !s.is_number_unsigned())
      throw CliError{1, "config: seed must be an integer"};
    return s.get<std::uint64_t>();
  }
  return 0;
}

int resolve_paths(const RunOptions& opt, const json& cfg) {
  int n = 1;
  if (opt.paths_given)
    n = opt.paths;
  else if (cfg.contains("paths"))
    n = as_int(cfg["paths"], "paths");
  if (n < 1) throw CliError{1, "path count must be positive"};
  return n;
}

int resolve_threads(const RunOptions& opt, const json& cfg) {
  if (opt.threads >= 0) return opt.threads;
  if (const char* env = std::getenv("ENSEMBLE_BRIDGE_THREADS")) {
    const std::string text(env);
    int v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || v < 0)
      throw CliError{1, "ENSEMBLE_BRIDGE_THREADS must be a non-negative integer"};
    return v;
  }
  if (cfg.contains("threads")) {
    const int v = as_int(cfg["threads"], "threads");
    if (v < 0) throw CliError{1, "config: threads must be non-negative"};
    return v;
  }
  return 0;
}

// Contiguous-block workers; results go into per-index slots so output order
// never depends on the thread count.
void run_parallel(int n, int threads, const std::function<void(int)>& fn) {
  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int block = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int lo = w * block, hi = std::min(n, lo + block);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

std::filesystem::path out_file(const RunOptions& opt, const std::string& name) {
  std::filesystem::create_directories(opt.out_dir);
  return std::filesystem::path(opt.out_dir) / name;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError{1, "cannot open output file " + path.string()};
  out << content;
  if (!out) throw CliError{1, "failed writing " + path.string()};
  std::cout << "wrote " << path.string() << "\n";
}

int cmd_check(const RunOptions& opt) {
  const json cfg = load_config(opt.config_path);
  EnsembleHandle ens;
  build_ensemble(cfg, ens);
  const double t_f = as_double(need(need(cfg, "problem", "problem"), "t_f", "problem.t_f"), "problem.t_f");
  char* raw = nullptr;
  check_st(eb_check_controllability_json(ens.ptr, t_f, &raw));
  const std::string report = take_string(raw);
  std::cout << report;
  if (opt.out_given) write_file(out_file(opt, "check.json"), report);
  const bool invertible = json::parse(report)["invertible"].get<bool>();
  return invertible ? 0 : 2;
}

int cmd_synthesize(const RunOptions& opt) {
  const json cfg = load_config(opt.config_path);
  EnsembleHandle ens;
  build_ensemble(cfg, ens);
  const ProblemData prob = parse_problem(cfg, eb_ensemble_state_dim(ens.ptr));
  ControllerHandle ctl;
  check_st(eb_controller_create(ens.ptr, &prob.p, EB_CONTROLLER_DISCRETE, &ctl.ptr));
  char* raw = nullptr;
  check_st(eb_controller_gains_meta_json(ctl.ptr, &raw));
  const std::string meta = take_string(raw);
  write_file(out_file(opt, "gains_meta.json"), meta);

  if (opt.dump_gains) {
    const json mj = json::parse(meta);
    const int k = mj["steps_k"].get<int>();
    const int m = mj["input_dim"].get<int>();
    std::vector<double> block(static_cast<size_t>(m) * m);
    std::string gains_csv = "i,j,row,col,value\n";
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < i; ++j) {
        check_st(eb_controller_gain(ctl.ptr, i, j, block.data()));
        for (int r = 0; r < m; ++r)
          for (int c = 0; c < m; ++c)
            gains_csv += std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(r) +
                         "," + std::to_string(c) + "," + fmt(block[r * m + c]) + "\n";
      }
    write_file(out_file(opt, "gains.csv"), gains_csv);
    std::vector<double> v(m);
    std::string open_csv = "i,row,value\n";
    for (int i = 0; i < k; ++i) {
      check_st(eb_controller_open_loop(ctl.ptr, i, v.data()));
      for (int r = 0; r < m; ++r)
        open_csv += std::to_string(i) + "," + std::to_string(r) + "," + fmt(v[r]) + "\n";
    }
    write_file(out_file(opt, "open_loop.csv"), open_csv);
  }
  return 0;
}

int cmd_simulate(const RunOptions& opt) {
  const json cfg = load_config(opt.config_path);
  EnsembleHandle ens;
  build_ensemble(cfg, ens);
  const int d = eb_ensemble_state_dim(ens.ptr);
  const int m = eb_ensemble_input_dim(ens.ptr);
  const ProblemData prob = parse_problem(cfg, d);
  const eb_controller_kind kind = parse_controller(cfg);
  const bool euler = parse_euler(cfg);
  const int n_paths = resolve_paths(opt, cfg);
  const int threads = resolve_threads(opt, cfg);
  const std::uint64_t seed = resolve_seed(opt, cfg);

  ControllerHandle ctl;
  check_st(eb_controller_create(ens.ptr, &prob.p, kind, &ctl.ptr));

  struct Slot {
    eb_record* rec = nullptr;
    eb_status st = EB_OK;
    std::string msg;
  };
  std::vector<Slot> slots(n_paths);
  run_parallel(n_paths, threads, [&](int p) {
    Slot& s = slots[p];
    s.st = eb_simulate(ens.ptr, &prob.p, ctl.ptr, seed + static_cast<std::uint64_t>(p), euler ? 1 : 0,
                       &s.rec);
    if (s.st != EB_OK) s.msg = eb_last_error();
  });
  for (const Slot& s : slots)
    if (s.st != EB_OK) {
      const CliError err{code_of(s.st), s.msg};
      for (Slot& t : slots) eb_record_free(t.rec);
      throw err;
    }

  const double dt = prob.p.t_f / prob.p.steps_k;
  std::string csv = "path_id,t";
  for (int c = 0; c < d; ++c) csv += ",x_" + std::to_string(c + 1);
  for (int c = 0; c < m; ++c) csv += ",u_" + std::to_string(c + 1);
  for (int c = 0; c < m; ++c) csv += ",w_" + std::to_string(c + 1);
  csv += "\n";
  std::vector<double> x(d), u(m), w(m);
  for (int p = 0; p < n_paths; ++p) {
    eb_record* rec = slots[p].rec;
    const int k = eb_record_steps(rec);
    for (int i = 0; i <= k; ++i) {
      check_st(eb_record_state(rec, i, x.data()));
      csv += std::to_string(p) + "," + fmt(i * dt);
      for (int c = 0; c < d; ++c) csv += "," + fmt(x[c]);
      if (i < k) {
        check_st(eb_record_control(rec, i, u.data()));
        check_st(eb_record_noise(rec, i, w.data()));
        for (int c = 0; c < m; ++c) csv += "," + fmt(u[c]);
        for (int c = 0; c < m; ++c) csv += "," + fmt(w[c]);
      } else {
        for (int c = 0; c < 2 * m; ++c) csv += ",";
      }
      csv += "\n";
    }
  }
  for (Slot& s : slots) eb_record_free(s.rec);
  write_file(out_file(opt, "trajectories.csv"), csv);

  char* raw = nullptr;
  check_st(eb_verify_endpoint_json(ens.ptr, &prob.p, ctl.ptr, n_paths, seed, threads, euler ? 1 : 0,
                                   &raw));
  write_file(out_file(opt, "summary.json"), take_string(raw));
  return 0;
}

int cmd_study(const RunOptions& opt) {
  const json cfg = load_config(opt.config_path);
  EnsembleHandle ens;
  build_ensemble(cfg, ens);
  const ProblemData prob = parse_problem(cfg, eb_ensemble_state_dim(ens.ptr));
  const json& sj = need(cfg, "study", "study");
  const std::vector<double> a_list = as_vector(need(sj, "a_list", "study.a_list"), -1, "study.a_list");
  if (a_list.empty()) throw CliError{1, "config: study.a_list must be a non-empty array of numbers"};
  const json& kj = need(sj, "k_list", "study.k_list");
  if (!kj.is_array() || kj.empty())
    throw CliError{1, "config: study.k_list must be a non-empty array of integers"};
  std::vector<int> k_list;
  for (const auto& e : kj) k_list.push_back(as_int(e, "study.k_list"));
  const int n_paths = resolve_paths(opt, cfg);
  const int threads = resolve_threads(opt, cfg);
  const std::uint64_t seed = resolve_seed(opt, cfg);

  char* raw = nullptr;
  check_st(eb_convergence_study_json(ens.ptr, &prob.p, a_list.data(),
                                     static_cast<int>(a_list.size()), k_list.data(),
                                     static_cast<int>(k_list.size()), n_paths, seed, threads, &raw));
  const std::string report = take_string(raw);
  write_file(out_file(opt, "study.json"), report);

  const json rj = json::parse(report);
  std::string csv = "penalty_a,steps_k,mean_sq_distance,std,stderr\n";
  for (const auto& cell : rj["cells"])
    csv += fmt(cell["penalty_a"].get<double>()) + "," + std::to_string(cell["steps_k"].get<int>()) +
           "," + fmt(cell["mean_sq_distance"].get<double>()) + "," + fmt(cell["std"].get<double>()) +
           "," + fmt(cell["stderr"].get<double>()) + "\n";
  write_file(out_file(opt, "study.csv"), csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic bridge synthesis and verification for ensembles of linear systems"};
  app.require_subcommand(1);

  RunOptions opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON problem configuration")->required();
    sub->add_option("--out", opt.out_dir, "output directory (default: current)");
    sub->add_option("--seed", opt.seed, "base RNG seed (path p uses seed + p)");
    sub->add_option("--paths", opt.paths, "number of Monte Carlo paths")
        ->check(CLI::PositiveNumber);
    sub->add_option("--threads", opt.threads,
                    "worker threads (0 = hardware; env ENSEMBLE_BRIDGE_THREADS as fallback)")
        ->check(CLI::NonNegativeNumber);
  };

  CLI::App* check = app.add_subcommand("check", "averaged-controllability report");
  add_common(check);
  CLI::App* synthesize = app.add_subcommand("synthesize", "discrete bridge controller gains");
  add_common(synthesize);
  synthesize->add_flag("--dump-gains", opt.dump_gains, "also dump every gain block as CSV");
  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo simulation of the controlled ensemble");
  add_common(simulate);
  CLI::App* study = app.add_subcommand("study", "discrete-to-continuous control distance table");
  add_common(study);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  opt.seed_given = sub->count("--seed") > 0;
  opt.paths_given = sub->count("--paths") > 0;
  opt.out_given = sub->count("--out") > 0;

  try {
    if (sub == check) return cmd_check(opt);
    if (sub == synthesize) return cmd_synthesize(opt);
    if (sub == simulate) return cmd_simulate(opt);
    return cmd_study(opt);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.msg << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
