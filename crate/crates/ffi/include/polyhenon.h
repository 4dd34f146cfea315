#ifndef POLYHENON_H
#define POLYHENON_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PhStatus {
  PH_STATUS_OK = 0,
  PH_STATUS_INVALID_PARAMS = 1,
  PH_STATUS_DEGENERATE_EXPONENT = 2,
  PH_STATUS_CRITICAL_WEIGHT = 3,
  PH_STATUS_OUT_OF_MODEL = 4,
  PH_STATUS_DOMAIN = 5,
  PH_STATUS_NO_SINGULAR_SOLUTION = 6,
  PH_STATUS_DIVERGENCE = 7,
  PH_STATUS_GRID_TOO_SMALL = 8,
  PH_STATUS_UNSUPPORTED = 9,
  PH_STATUS_NON_CONVERGENCE = 10,
  PH_STATUS_INSUFFICIENT_BLOWUP = 11,
  PH_STATUS_CONSISTENCY = 12,
  PH_STATUS_INAPPLICABLE = 13,
  PH_STATUS_IO = 14,
  PH_STATUS_PARSE = 15,
  PH_STATUS_NULL_POINTER = 16,
  PH_STATUS_INVALID_UTF8 = 17,
  PH_STATUS_PANIC = 18,
} PhStatus;

/**
 * Green operator of the unit ball.
 */
typedef struct PhGreen PhGreen;

/**
 * Geometric radial grid.
 */
typedef struct PhGrid PhGrid;

/**
 * Radial profile with power-law ends.
 */
typedef struct PhProfile PhProfile;

/**
 * Discretised Riesz potential on a grid.
 */
typedef struct PhRiesz PhRiesz;

/**
 * `(−Δ)^m u = |x|^σ u^p` in dimension `n`.
 */
typedef struct PhParams {
  uint32_t n;
  uint32_t m;
  double sigma;
  double p;
} PhParams;

/**
 * Solver settings for [`ph_solve_entire`]. `damping <= 0` selects Newton,
 * otherwise damped Picard.
 */
typedef struct PhEntireOptions {
  double tol;
  uint32_t max_iter;
  double damping;
} PhEntireOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until
 * the next call into this library from the same thread.
 */
const char *ph_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void ph_string_free(char *s);

/**
 * Regime certificate as JSON.
 *
 * # Safety
 * `out_json` must be writable.
 */
enum PhStatus ph_classify(struct PhParams params, char **out_json);

/**
 * `C0` and `θ` of the singular solution `C0 |x|^−θ`.
 *
 * # Safety
 * `out_c0` and `out_theta` must be writable.
 */
enum PhStatus ph_singular(struct PhParams params, double *out_c0, double *out_theta);

/**
 * # Safety
 * `out` must be writable.
 */
enum PhStatus ph_grid_geometric(double r_min, double r_max, size_t count, struct PhGrid **out);

/**
 * # Safety
 * `grid` must be null or a live handle.
 */
void ph_grid_free(struct PhGrid *grid);

/**
 * # Safety
 * `grid` must be a live handle and `out` writable.
 */
enum PhStatus ph_riesz_build(uint32_t n,
                             uint32_t m,
                             const struct PhGrid *grid,
                             struct PhRiesz **out);

/**
 * # Safety
 * `op` must be null or a live handle.
 */
void ph_riesz_free(struct PhRiesz *op);

/**
 * # Safety
 * `grid` must be a live handle and `out` writable.
 */
enum PhStatus ph_green_build(uint32_t n,
                             uint32_t m,
                             const struct PhGrid *grid,
                             struct PhGreen **out);

/**
 * # Safety
 * `op` must be null or a live handle.
 */
void ph_green_free(struct PhGreen *op);

/**
 * Profile from `len` nodal values with power-law ends of the given exponents.
 *
 * # Safety
 * `values` must hold `len` doubles; `grid` must be live; `out` writable.
 */
enum PhStatus ph_profile_new(const struct PhGrid *grid,
                             const double *values,
                             size_t len,
                             double inner_exp,
                             double tail_exp,
                             struct PhProfile **out);

/**
 * # Safety
 * `u` must be null or a live handle.
 */
void ph_profile_free(struct PhProfile *u);

/**
 * Number of nodes, or 0 for null.
 *
 * # Safety
 * `u` must be null or a live handle.
 */
size_t ph_profile_len(const struct PhProfile *u);

/**
 * Copies up to `cap` radii and values into the buffers; either may be null.
 *
 * # Safety
 * Non-null buffers must hold `cap` doubles.
 */
enum PhStatus ph_profile_copy(const struct PhProfile *u, double *radii, double *values, size_t cap);

/**
 * Value at any `r > 0`, using the power-law ends off the grid.
 *
 * # Safety
 * `u` must be live and `out` writable.
 */
enum PhStatus ph_profile_eval(const struct PhProfile *u, double r, double *out);

/**
 * CSV text `r,u`.
 *
 * # Safety
 * `u` must be live and `out_csv` writable.
 */
enum PhStatus ph_profile_csv(const struct PhProfile *u, char **out_csv);

/**
 * Entire radial solution from the bubble guess. `opts` may be null for
 * defaults; `out_report` may be null.
 *
 * # Safety
 * Handles must be live and non-null outputs writable.
 */
enum PhStatus ph_solve_entire(struct PhParams params,
                              const struct PhRiesz *op,
                              const struct PhEntireOptions *opts,
                              struct PhProfile **out,
                              char **out_report);

/**
 * Minimal solution of the ball problem at `lambda`.
 *
 * # Safety
 * `op` must be live and `out` writable.
 */
enum PhStatus ph_ball_minimal(struct PhParams params,
                              const struct PhGreen *op,
                              double lambda,
                              struct PhProfile **out);

/**
 * Bracket `[lo, hi]` for the extremal parameter, width at most `tol`.
 *
 * # Safety
 * `op` must be live and outputs writable.
 */
enum PhStatus ph_lambda_star(struct PhParams params,
                             const struct PhGreen *op,
                             double tol,
                             double *out_lo,
                             double *out_hi);

/**
 * First weighted Dirichlet eigenvalue of `(−Δ)^m` on the unit ball.
 *
 * # Safety
 * `op` must be live and `out` writable.
 */
enum PhStatus ph_first_eigenvalue(double sigma, const struct PhGreen *op, double *out);

/**
 * Runs the comma-separated `checks` (`sph`, `serrin-zou`, `ring`) and
 * returns the report as JSON. `out_passed` receives 1 when every enforced
 * check passed.
 *
 * # Safety
 * `checks` must be a NUL-terminated string; handles live; outputs writable.
 */
enum PhStatus ph_verify(struct PhParams params,
                        const struct PhProfile *u,
                        const char *checks,
                        int32_t *out_passed,
                        char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POLYHENON_H */
