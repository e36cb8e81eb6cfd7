/* C interface of the ensemble-bridge library.
 *
 * Handles are opaque; every fallible call returns an eb_status and writes its
 * result through out-parameters. On failure the thread-local message from
 * eb_last_error() describes what was rejected. Strings returned through char**
 * out-parameters are heap copies; release them with eb_string_free().
 */
#ifndef ENSEMBLE_BRIDGE_H
#define ENSEMBLE_BRIDGE_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum eb_status {
  EB_OK = 0,
  EB_ERR_INVALID_INPUT = 1,
  EB_ERR_SINGULAR_GRAMIAN = 2,
  EB_ERR_DIVERGENCE = 3,
  EB_ERR_INTERNAL = 4
} eb_status;

typedef struct eb_ensemble eb_ensemble;
typedef struct eb_controller eb_controller;
typedef struct eb_record eb_record;

/* Bridge problem data; x0 and xf point at state_dim doubles. */
typedef struct eb_problem {
  const double* x0;
  const double* xf;
  double t_f;
  double eps;
  double penalty_a;
  int steps_k;
} eb_problem;

typedef struct eb_controllability_report {
  int invertible;
  double cond; /* max_eig / min_eig; +inf when not invertible */
  double min_eig;
  double max_eig;
  double threshold;
} eb_controllability_report;

typedef enum eb_controller_kind {
  EB_CONTROLLER_NONE = 0,          /* u = 0 */
  EB_CONTROLLER_DETERMINISTIC = 1, /* open-loop minimum-energy steering */
  EB_CONTROLLER_DISCRETE = 2,      /* regularized discrete noise-history gains */
  EB_CONTROLLER_CONTINUOUS = 3,    /* continuous feedforward on the grid */
  EB_CONTROLLER_MARKOV = 4         /* -x/(t_f - t); Brownian family only */
} eb_controller_kind;

const char* eb_version(void);

/* Message for the most recent failure on the calling thread. */
const char* eb_last_error(void);

void eb_string_free(char* s);

/* --- ensembles ------------------------------------------------------------ */

/* Accepts {"family": "...", ...} or {"nodes": [{theta,weight,A,B}, ...]}. */
eb_status eb_ensemble_from_json(const char* json_text, eb_ensemble** out);
void eb_ensemble_free(eb_ensemble* ens);
int eb_ensemble_state_dim(const eb_ensemble* ens);
int eb_ensemble_input_dim(const eb_ensemble* ens);
int eb_ensemble_node_count(const eb_ensemble* ens);

/* --- averaged-controllability analysis ------------------------------------ */

eb_status eb_check_controllability(const eb_ensemble* ens, double t_f,
                                   eb_controllability_report* out);

/* Report as JSON, including the spectral shift when the time quadrature is
 * refined 2x (field time_refinement_delta). */
eb_status eb_check_controllability_json(const eb_ensemble* ens, double t_f, char** out_json);

/* Averaged Gramian over [s, t] into out[state_dim * state_dim], row-major.
 * n_panels <= 0 selects the default quadrature resolution. */
eb_status eb_gramian(const eb_ensemble* ens, double t, double s, int n_panels, double* out);

/* Minimum averaged-state steering energy between x0 and xf over [0, t_f]. */
eb_status eb_transport_cost(const eb_ensemble* ens, const double* x0, const double* xf, double t_f,
                            double* out);

eb_status eb_density_brownian(int dim, double s, const double* x, double t, const double* y,
                              double* out);
eb_status eb_density_gramian(const eb_ensemble* ens, double eps, double s, const double* x,
                             double t, const double* y, double* out);

/* --- controllers ----------------------------------------------------------- */

eb_status eb_controller_create(const eb_ensemble* ens, const eb_problem* prob,
                               eb_controller_kind kind, eb_controller** out);
void eb_controller_free(eb_controller* ctl);

/* Synthesis metadata (grid, open-loop norms, kernel spectra); discrete kind only. */
eb_status eb_controller_gains_meta_json(const eb_controller* ctl, char** out_json);

/* Noise-history gain K[i][j] (input_dim x input_dim, row-major, 0 <= j < i < k)
 * and open-loop term v[i] (input_dim); discrete kind only. */
eb_status eb_controller_gain(const eb_controller* ctl, int i, int j, double* out);
eb_status eb_controller_open_loop(const eb_controller* ctl, int i, double* out);

/* --- simulation ------------------------------------------------------------ */

/* One path of the controlled ensemble from the given seed. euler nonzero runs
 * per-node Euler-Maruyama; zero runs the exact-semigroup averaged recursion. */
eb_status eb_simulate(const eb_ensemble* ens, const eb_problem* prob, const eb_controller* ctl,
                      uint64_t seed, int euler, eb_record** out);
void eb_record_free(eb_record* rec);
int eb_record_steps(const eb_record* rec);
eb_status eb_record_state(const eb_record* rec, int step, double* out);   /* averaged, step 0..k */
eb_status eb_record_control(const eb_record* rec, int step, double* out); /* step 0..k-1 */
eb_status eb_record_noise(const eb_record* rec, int step, double* out);   /* step 0..k-1 */
double eb_record_running_cost(const eb_record* rec);
double eb_record_penalized_cost(const eb_record* rec);
double eb_record_endpoint_error(const eb_record* rec);

/* Endpoint statistics over n_paths seeds base_seed+p; identical output for any
 * thread count (threads = 0 uses the hardware count). */
eb_status eb_verify_endpoint_json(const eb_ensemble* ens, const eb_problem* prob,
                                  const eb_controller* ctl, int n_paths, uint64_t base_seed,
                                  int threads, int euler, char** out_json);

/* Control distance of each (penalty, steps) discrete controller to the
 * continuous reference on the finest grid, from paired noise paths. */
eb_status eb_convergence_study_json(const eb_ensemble* ens, const eb_problem* prob,
                                    const double* a_list, int n_a, const int* k_list, int n_k,
                                    int n_paths, uint64_t base_seed, int threads, char** out_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* ENSEMBLE_BRIDGE_H */
