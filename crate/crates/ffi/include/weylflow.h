#ifndef WEYLFLOW_H
#define WEYLFLOW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Spectral flow algorithm selector.
 */
typedef enum WfAlgorithm {
  WF_ALGORITHM_CROSSINGS = 0,
  WF_ALGORITHM_EXP_WINDING = 1,
} WfAlgorithm;

/**
 * Result codes.
 */
typedef enum WfStatus {
  WF_STATUS_OK = 0,
  WF_STATUS_NULL_POINTER = 1,
  WF_STATUS_INVALID_INPUT = 2,
  /**
   * Eigensolver, winding or refinement failure.
   */
  WF_STATUS_NUMERICAL = 3,
  /**
   * Spectral window or level outside the gap.
   */
  WF_STATUS_NOT_FREDHOLM = 4,
  WF_STATUS_CONFIG = 5,
  WF_STATUS_IO = 6,
  /**
   * Output buffer too small; the required size was reported.
   */
  WF_STATUS_BUFFER_TOO_SMALL = 7,
  /**
   * A Rust panic was caught at the boundary.
   */
  WF_STATUS_PANIC = 8,
} WfStatus;

/**
 * Quadratic continuum field with two roots.
 */
typedef struct WfContinuumField WfContinuumField;

/**
 * Discretized half-line operator.
 */
typedef struct WfHalfLine WfHalfLine;

/**
 * Verification report of a config run.
 */
typedef struct WfReport WfReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *wf_version(void);

/**
 * Copies the last error message of this thread into `buf`. `needed`, if
 * not NULL, receives the size including the terminator.
 *
 * # Safety
 * `buf` must point to `cap` writable bytes or be NULL.
 */
enum WfStatus wf_last_error_message(char *buf, size_t cap, size_t *needed);

/**
 * Closed-form bound state of the half-line operator. `has_state` is set to
 * 0 when there is none, in which case `energy` and `decay` are untouched.
 *
 * # Safety
 * Output pointers must be valid.
 */
enum WfStatus wf_bound_state(double m,
                             double theta,
                             double gamma,
                             int32_t *has_state,
                             double *energy,
                             double *decay);

/**
 * Discretizes the half-line operator on `n_sites` sites of width `spacing`.
 *
 * # Safety
 * `out` must be valid; on success it owns a handle for `wf_halfline_free`.
 */
enum WfStatus wf_halfline_create(double m,
                                 double theta,
                                 double gamma,
                                 size_t n_sites,
                                 double spacing,
                                 struct WfHalfLine **out);

/**
 * # Safety
 * `h` must come from `wf_halfline_create` and not be used afterwards.
 */
void wf_halfline_free(struct WfHalfLine *h);

/**
 * Matrix dimension, twice the number of sites.
 *
 * # Safety
 * `h` must be a live handle, `dim` valid.
 */
enum WfStatus wf_halfline_dim(const struct WfHalfLine *h, size_t *dim);

/**
 * Relative angle `theta - gamma` reduced to `(-pi, pi]`.
 *
 * # Safety
 * `h` must be a live handle, `phi` valid.
 */
enum WfStatus wf_halfline_phi(const struct WfHalfLine *h, double *phi);

/**
 * Eigenvalues in `(lo, hi)`, ascending. `count` receives the number found;
 * if it exceeds `cap` nothing is written and `BufferTooSmall` is returned.
 *
 * # Safety
 * `values` must point to `cap` doubles or be NULL with `cap == 0`.
 */
enum WfStatus wf_halfline_eigenvalues(const struct WfHalfLine *h,
                                      double lo,
                                      double hi,
                                      double *values,
                                      size_t cap,
                                      size_t *count);

/**
 * Spectral flow around `theta` in `[0, 2 pi)` at fixed mass and boundary
 * angle, sampled at `samples` points on a fixed grid. `algorithm` is a
 * `WfAlgorithm` value.
 *
 * # Safety
 * `flow` must be valid.
 */
enum WfStatus wf_basic_loop_flow(double m,
                                 double gamma,
                                 size_t n_sites,
                                 double spacing,
                                 size_t samples,
                                 double window_fraction,
                                 int32_t algorithm,
                                 int64_t *flow);

/**
 * Quadratic field with roots `w_plus` and `w_minus`.
 *
 * # Safety
 * `out` must be valid; on success it owns a handle for
 * `wf_continuum_field_free`.
 */
enum WfStatus wf_continuum_field_create(double w_plus_x,
                                        double w_plus_y,
                                        double w_minus_x,
                                        double w_minus_y,
                                        struct WfContinuumField **out);

/**
 * # Safety
 * `f` must come from `wf_continuum_field_create` and not be used afterwards.
 */
void wf_continuum_field_free(struct WfContinuumField *f);

/**
 * Value of `g` at `(x, y)`.
 *
 * # Safety
 * `f` must be a live handle, outputs valid.
 */
enum WfStatus wf_continuum_field_eval(const struct WfContinuumField *f,
                                      double x,
                                      double y,
                                      double *re,
                                      double *im);

/**
 * Local indices of `w_plus` and `w_minus`.
 *
 * # Safety
 * `f` must be a live handle, outputs valid.
 */
enum WfStatus wf_continuum_local_indices(const struct WfContinuumField *f,
                                         int64_t *plus,
                                         int64_t *minus);

/**
 * Flow predicted for an anticlockwise circle: minus the winding of `g`.
 *
 * # Safety
 * `f` must be a live handle, `flow` valid.
 */
enum WfStatus wf_continuum_circle_flow(const struct WfContinuumField *f,
                                       double center_x,
                                       double center_y,
                                       double radius,
                                       size_t samples,
                                       int64_t *flow);

/**
 * Runs a scenario config. `out_dir` may be NULL to use the configured
 * location; `jobs` 0 uses the default pool.
 *
 * # Safety
 * `config_path` must be a NUL-terminated string, `out` valid. On success
 * `out` owns a handle for `wf_report_free`.
 */
enum WfStatus wf_run_config(const char *config_path,
                            const char *out_dir,
                            size_t jobs,
                            struct WfReport **out);

/**
 * # Safety
 * `r` must come from `wf_run_config` and not be used afterwards.
 */
void wf_report_free(struct WfReport *r);

/**
 * Check counts of a report.
 *
 * # Safety
 * `r` must be a live handle, outputs valid.
 */
enum WfStatus wf_report_counts(const struct WfReport *r, size_t *passed, size_t *failed);

/**
 * One-line summary of check `index`, as printed by the command line tool.
 *
 * # Safety
 * `r` must be a live handle; `buf` must point to `cap` bytes or be NULL.
 */
enum WfStatus wf_report_check_line(const struct WfReport *r,
                                   size_t index,
                                   char *buf,
                                   size_t cap,
                                   size_t *needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WEYLFLOW_H */
