#ifndef MPDG_H
#define MPDG_H

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum MpdgStatus {
  MPDG_STATUS_OK = 0,
  MPDG_STATUS_NULL_POINTER = 1,
  MPDG_STATUS_INVALID_ARGUMENT = 2,
  MPDG_STATUS_INADMISSIBLE = 3,
  MPDG_STATUS_SINGULAR = 4,
  MPDG_STATUS_NON_FINITE = 5,
  MPDG_STATUS_IO = 6,
  MPDG_STATUS_BUFFER_TOO_SMALL = 7,
  MPDG_STATUS_PANIC = 8,
} MpdgStatus;

/**
 * A flow solver with its current state.
 */
typedef struct MpdgSolver MpdgSolver;

/**
 * Diagnostics of one step.
 */
typedef struct MpdgStepInfo {
  uint64_t step;
  double time;
  double dt;
  double alpha;
  double min_density;
  double min_pressure;
  double min_fraction;
  double max_fraction;
  double fraction_defect;
  bool restarted;
} MpdgStepInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none. Valid
 * until the next failing call on the same thread.
 */
const char *mpdg_last_error(void);

/**
 * Library version as a static string.
 */
const char *mpdg_version(void);

/**
 * Solves one Patankar stage with destruction weights equal to the
 * transposed production weights. `production` is row-major `m × m`;
 * `x` receives `m` values.
 *
 * # Safety
 * Every pointer must be valid for the stated number of elements.
 */
enum MpdgStatus mpdg_stage_solve(size_t m,
                                 const double *explicit_,
                                 const double *production,
                                 const double *denominators,
                                 double dt,
                                 double *x);

/**
 * Creates a solver for a flow case from a JSON configuration with a
 * `case` key. Returns null on failure.
 *
 * # Safety
 * `config_json` must be a valid NUL-terminated string; `status` may be null.
 */
struct MpdgSolver *mpdg_solver_new(const char *config_json, enum MpdgStatus *status);

/**
 * Releases a solver; null is ignored.
 *
 * # Safety
 * `solver` must come from [`mpdg_solver_new`] and not be used afterwards.
 */
void mpdg_solver_free(struct MpdgSolver *solver);

/**
 * Takes one step without passing `t_end`; `info` may be null.
 *
 * # Safety
 * `solver` must be a live handle; `info` null or writable.
 */
enum MpdgStatus mpdg_solver_step(struct MpdgSolver *solver,
                                 double t_end,
                                 struct MpdgStepInfo *info);

/**
 * Marches to `t_end`; a negative `t_end` means the configured final time.
 *
 * # Safety
 * `solver` must be a live handle.
 */
enum MpdgStatus mpdg_solver_run(struct MpdgSolver *solver, double t_end);

/**
 * Current time, or NaN for a null handle.
 *
 * # Safety
 * `solver` must be null or a live handle.
 */
double mpdg_solver_time(const struct MpdgSolver *solver);

/**
 * Steps taken so far, 0 for a null handle.
 *
 * # Safety
 * `solver` must be null or a live handle.
 */
uint64_t mpdg_solver_steps(const struct MpdgSolver *solver);

/**
 * Field shape: cells, nodes per cell, variables per node. Values are
 * stored as `[(cell * nodes + node) * vars + var]`.
 *
 * # Safety
 * `solver` must be a live handle; the outputs must be writable.
 */
enum MpdgStatus mpdg_solver_shape(const struct MpdgSolver *solver,
                                  size_t *cells,
                                  size_t *nodes,
                                  size_t *vars);

/**
 * Copies the nodal values into `out`, which holds `len` doubles.
 *
 * # Safety
 * `solver` must be a live handle and `out` valid for `len` writes.
 */
enum MpdgStatus mpdg_solver_copy_field(const struct MpdgSolver *solver, double *out, size_t len);

/**
 * Runs any case from a JSON configuration and writes its artifacts into
 * `out_dir` (snapshots, log, config, checkpoint).
 *
 * # Safety
 * Both strings must be valid and NUL-terminated.
 */
enum MpdgStatus mpdg_run_case(const char *config_json, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MPDG_H */
