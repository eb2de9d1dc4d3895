/* C interface to the h2grid dispatch library.
 *
 * All objects are opaque handles owned by the caller and released with the
 * matching *_free function. Functions return an h2g_status; on failure the
 * message is available from h2g_last_error() on the same thread until the
 * next call. Strings returned through char** are released with
 * h2g_string_free.
 */
#ifndef H2GRID_H2GRID_H
#define H2GRID_H2GRID_H

#include <stddef.h>
#include <stdint.h>

#if defined(H2GRID_BUILDING)
#define H2G_API __attribute__((visibility("default")))
#else
#define H2G_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum h2g_status {
  H2G_OK = 0,
  H2G_ERR_INVALID_ARGUMENT = 1,
  H2G_ERR_IO = 2,
  H2G_ERR_PARSE = 3,
  H2G_ERR_VALIDATION = 4,
  H2G_ERR_INFEASIBLE = 5,
  H2G_ERR_SOLVER = 6,
  H2G_ERR_PARTIAL = 7, /* some sweep sub-cases failed */
  H2G_ERR_UNKNOWN = 99
} h2g_status;

typedef enum h2g_coupling {
  H2G_COUPLING_DROOP = 0,    /* device powers follow their droop curves */
  H2G_COUPLING_DISPATCH = 1  /* free setpoints, no frequency/voltage coupling */
} h2g_coupling;

typedef enum h2g_sweep_kind {
  H2G_SWEEP_HYDROGEN = 0,
  H2G_SWEEP_GRIDFORMING = 1,
  H2G_SWEEP_BASELINE = 2
} h2g_sweep_kind;

typedef struct h2g_case h2g_case;
typedef struct h2g_scenarios h2g_scenarios;
typedef struct h2g_plan h2g_plan;

typedef struct h2g_solver_options {
  /* Command template with {lp} {sol} {time_limit} {gap}; NULL or "" falls
   * back to the H2GRID_SOLVER_CMD environment variable. */
  const char* command;
  double time_limit_s; /* <= 0 selects 600 */
  double mip_gap;      /* < 0 selects 1e-6 */
  h2g_coupling coupling;
} h2g_solver_options;

H2G_API const char* h2g_version(void);
H2G_API const char* h2g_last_error(void);
H2G_API const char* h2g_status_name(h2g_status status);
H2G_API void h2g_string_free(char* s);
H2G_API void h2g_solver_options_init(h2g_solver_options* opts);

/* Parses and validates a case file. */
H2G_API h2g_status h2g_case_load(const char* path, h2g_case** out);
/* Parses a case file and returns its validation issues as a JSON array.
 * Returns H2G_OK when parsing succeeded, whatever the issue count. */
H2G_API h2g_status h2g_case_check_file(const char* path, char** issues_json, size_t* n_issues);
H2G_API h2g_status h2g_case_to_json(const h2g_case* c, char** out);
H2G_API void h2g_case_free(h2g_case* c);

/* Reads the forecast CSV (kW), draws n error samples from seed and keeps the
 * two extreme samples plus the forecast. jobs = 0 uses all cores. */
H2G_API h2g_status h2g_scenarios_generate(const h2g_case* c, const char* forecast_csv, size_t n, uint64_t seed,
                                          unsigned jobs, h2g_scenarios** out);
H2G_API h2g_status h2g_scenarios_to_json(const h2g_scenarios* s, char** out);
H2G_API void h2g_scenarios_free(h2g_scenarios* s);

/* Writes the MILP in LP format. Counts may be NULL. */
H2G_API h2g_status h2g_model_write_lp(const h2g_case* c, const h2g_scenarios* s, h2g_coupling coupling,
                                      const char* path, size_t* n_variables, size_t* n_binaries);

/* Builds, solves with the external solver and decodes the plan.
 * H2G_ERR_INFEASIBLE when the solver proves infeasibility. */
H2G_API h2g_status h2g_solve(const h2g_case* c, const h2g_scenarios* s, const h2g_solver_options* opts,
                             h2g_plan** out);
H2G_API double h2g_plan_objective(const h2g_plan* p);
H2G_API h2g_status h2g_plan_to_json(const h2g_plan* p, char** out);
H2G_API h2g_status h2g_plan_report_json(const h2g_plan* p, char** out);
H2G_API h2g_status h2g_plan_report_csv(const h2g_plan* p, const char* label, char** out);
H2G_API void h2g_plan_free(h2g_plan* p);

/* Runs a sweep and writes <out_dir>/<case>/... and <out_dir>/sweep.csv.
 * opts->coupling is ignored. Returns H2G_ERR_PARTIAL if any sub-case failed. */
H2G_API h2g_status h2g_sweep_run(const h2g_case* c, const h2g_scenarios* s, h2g_sweep_kind kind,
                                 const h2g_solver_options* opts, unsigned jobs, const char* out_dir,
                                 size_t* n_cases, size_t* n_failed);

#ifdef __cplusplus
}
#endif

#endif /* H2GRID_H2GRID_H */
