/* C interface to the sysrisk engine.
 *
 * Every function returns an sr_status. On failure a description is available
 * from sr_last_error() until the next call on the same thread. Handles are
 * opaque and owned by the caller; release them with the matching _free.
 */
#ifndef SYSRISK_SYSRISK_H
#define SYSRISK_SYSRISK_H

#include <stddef.h>
#include <stdint.h>

#if defined(SYSRISK_BUILDING)
#define SR_API __attribute__((visibility("default")))
#else
#define SR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sr_status {
  SR_OK = 0,
  SR_E_ARGUMENT = 1,          /* null pointer or malformed argument */
  SR_E_VALIDATION = 2,        /* configuration, parameter or domain error */
  SR_E_NUMERICAL = 3,         /* divergence, step size or scheme instability */
  SR_E_STATISTICAL_POWER = 4, /* too few samples or paths */
  SR_E_IO = 5,
  SR_E_CHECK_FAILED = 6,      /* validation ran and at least one check failed */
  SR_E_INTERNAL = 7
} sr_status;

typedef struct sr_scenario sr_scenario;
typedef struct sr_noise sr_noise;
typedef struct sr_kernel sr_kernel;

SR_API const char* sr_version(void);
SR_API const char* sr_last_error(void);
/* Process exit code for a status: 0, 2 (validation), 3 (numerical), 4 (statistical power). */
SR_API int sr_exit_code(sr_status status);

/* Scenarios */
SR_API sr_status sr_scenario_load(const char* path, sr_scenario** out);
SR_API void sr_scenario_free(sr_scenario* scenario);
SR_API sr_status sr_scenario_set_seed(sr_scenario* scenario, uint64_t seed);
SR_API sr_status sr_scenario_set_threads(sr_scenario* scenario, unsigned threads);
SR_API sr_status sr_scenario_seed(const sr_scenario* scenario, uint64_t* out);
SR_API sr_status sr_scenario_horizon(const sr_scenario* scenario, double* out);

/* Common-noise paths */
SR_API sr_status sr_noise_from_seed(const sr_scenario* scenario, uint64_t seed, sr_noise** out);
SR_API sr_status sr_noise_load(const char* path, sr_noise** out);
SR_API sr_status sr_noise_save(const sr_noise* noise, const char* path);
SR_API void sr_noise_free(sr_noise* noise);
SR_API sr_status sr_noise_info(const sr_noise* noise, double* dt, size_t* length, uint64_t* hash);

/* Solver verbs. noise may be NULL to use the scenario seed. */
SR_API sr_status sr_simulate_particles(const sr_scenario* scenario, const sr_noise* noise, const char* out_dir);
SR_API sr_status sr_solve_spde(const sr_scenario* scenario, const sr_noise* noise, const char* out_dir);
/* experiment may be NULL to run every experiment of the scenario. */
SR_API sr_status sr_run(const sr_scenario* scenario, const char* out_dir, const char* experiment);
SR_API sr_status sr_compare(const char* particles_dir, const char* spde_dir, const char* out_csv);
/* Writes report.csv; returns SR_E_CHECK_FAILED when any check fails. */
SR_API sr_status sr_validate(const sr_scenario* scenario, const char* out_csv, size_t* checks, size_t* failed);
/* First seed >= start inside the named noise regime's band (or noise.band when regime is NULL). */
SR_API sr_status sr_search_seed(const sr_scenario* scenario, const char* regime, uint64_t start, uint64_t* out);

/* Kernels and closed forms */
SR_API sr_status sr_kernel_triangle(double support_end, sr_kernel** out);
SR_API void sr_kernel_free(sr_kernel* kernel);
SR_API sr_status sr_kernel_eval(const sr_kernel* kernel, double u, double* density, double* cumulative);
SR_API sr_status sr_first_passage_loss(double x0, double b, double sigma, double t, double* out);
SR_API sr_status sr_dirichlet_heat_kernel(double t, double x, double y, double* out);

#ifdef __cplusplus
}
#endif

#endif
