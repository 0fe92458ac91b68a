/* C interface to the dbpark simulation and certificate library.
 *
 * Every function returns a dbp_status. On failure dbp_last_error() gives a
 * message for the calling thread. Handles are opaque and owned by the
 * caller; release them with the matching *_free function. Strings returned
 * through `const char**` stay valid until the owning handle is freed.
 */
#ifndef DBPARK_DBPARK_H
#define DBPARK_DBPARK_H

#include <stddef.h>

#if defined(DBPARK_BUILDING)
#define DBP_API __attribute__((visibility("default")))
#else
#define DBP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dbp_status {
  DBP_OK = 0,
  DBP_ERR_DOMAIN = 1,
  DBP_ERR_DEGENERATE_ORIGIN = 2,
  DBP_ERR_GUARD_TRIPPED = 3,
  DBP_ERR_MISMATCHED_LAW = 4,
  DBP_ERR_PARSE = 5,
  DBP_ERR_INVALID_ARGUMENT = 6,
  DBP_ERR_IO = 7,
  DBP_ERR_INTERNAL = 8
} dbp_status;

typedef struct dbp_polar {
  double rho;
  double delta;
  double gamma;
} dbp_polar;

typedef struct dbp_pose {
  double x;
  double y;
  double theta;
} dbp_pose;

typedef struct dbp_run_info {
  const char* name;
  int passed;          /* certificate overall verdict */
  int completed;       /* 0 when the run stopped with an error */
  size_t samples;
  int reached_cutoff;
  double cutoff_time;  /* valid when reached_cutoff */
  double max_abs_omega;
} dbp_run_info;

typedef struct dbp_scenario_set dbp_scenario_set;
typedef struct dbp_results dbp_results;
typedef struct dbp_sweep dbp_sweep;
typedef struct dbp_sweep_results dbp_sweep_results;

DBP_API const char* dbp_last_error(void);
DBP_API const char* dbp_status_name(dbp_status status);

/* Scenario files */
DBP_API dbp_status dbp_scenario_load(const char* path, dbp_scenario_set** out);
DBP_API dbp_status dbp_scenario_parse(const char* text, dbp_scenario_set** out);
/* Sets key = value in every run and re-validates (e.g. "step", "cutoff"). */
DBP_API dbp_status dbp_scenario_override(dbp_scenario_set* set,
                                         const char* key, const char* value);
DBP_API dbp_status dbp_scenario_title(const dbp_scenario_set* set,
                                      const char** out);
DBP_API dbp_status dbp_scenario_count(const dbp_scenario_set* set,
                                      size_t* out);
DBP_API void dbp_scenario_free(dbp_scenario_set* set);

/* Runs; workers >= 1. Run failures are reported per run, not as status. */
DBP_API dbp_status dbp_run(const dbp_scenario_set* set, size_t workers,
                           dbp_results** out);
DBP_API dbp_status dbp_results_count(const dbp_results* results, size_t* out);
DBP_API dbp_status dbp_results_info(const dbp_results* results, size_t index,
                                    dbp_run_info* out);
/* 1 when every run completed and passed its certificate. */
DBP_API dbp_status dbp_results_passed(const dbp_results* results, int* out);
DBP_API dbp_status dbp_results_report(const dbp_results* results,
                                      const char** out);
DBP_API dbp_status dbp_results_csv(const dbp_results* results, size_t index,
                                   const char** out);
DBP_API dbp_status dbp_results_write(const dbp_results* results,
                                     const char* out_dir);
DBP_API void dbp_results_free(dbp_results* results);

/* Parameter sweeps */
DBP_API dbp_status dbp_sweep_load(const char* path, dbp_sweep** out);
DBP_API dbp_status dbp_sweep_parse(const char* text, dbp_sweep** out);
DBP_API dbp_status dbp_sweep_override(dbp_sweep* sweep, const char* key,
                                      const char* value);
DBP_API dbp_status dbp_sweep_point_count(const dbp_sweep* sweep, size_t* out);
DBP_API dbp_status dbp_sweep_workers(const dbp_sweep* sweep, size_t* out);
/* workers = 0 uses the count from the sweep file. */
DBP_API dbp_status dbp_sweep_run(const dbp_sweep* sweep, size_t workers,
                                 dbp_sweep_results** out);
DBP_API dbp_status dbp_sweep_table(const dbp_sweep_results* results,
                                   const char** out);
DBP_API dbp_status dbp_sweep_pass_fraction(const dbp_sweep_results* results,
                                           double* out);
DBP_API dbp_status dbp_sweep_write(const dbp_sweep_results* results,
                                   const char* out_dir);
DBP_API void dbp_sweep_free(dbp_sweep* sweep);
DBP_API void dbp_sweep_results_free(dbp_sweep_results* results);

/* Re-certifies a trajectory CSV under a law spec such as
 * "backstep,c1=1.01,c2=5,v=0.5". The result holds one run. */
DBP_API dbp_status dbp_check_csv(const char* path, const char* law_spec,
                                 double cutoff_rho, dbp_results** out);

/* Primitives */
DBP_API dbp_status dbp_cart_to_polar(dbp_pose pose, dbp_polar* out);
DBP_API dbp_status dbp_polar_to_cart(dbp_polar state, dbp_pose* out);
DBP_API dbp_status dbp_control(const char* law_spec, dbp_polar state,
                               double* v, double* omega);
/* Integrates and certifies one run; step = 0 and horizon = 0 mean auto. */
DBP_API dbp_status dbp_simulate(const char* law_spec, dbp_polar initial,
                                double step, double cutoff_rho, double horizon,
                                dbp_results** out);

#ifdef __cplusplus
}
#endif

#endif
