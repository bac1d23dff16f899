#ifndef PRIVREGION_H
#define PRIVREGION_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. Values 1 to 3 match the command-line exit codes.
 */
typedef enum PrStatus {
  PR_STATUS_OK = 0,
  PR_STATUS_INVALID_ARGUMENT = 1,
  PR_STATUS_INFEASIBLE = 2,
  PR_STATUS_NOT_CONVERGED = 3,
  PR_STATUS_NULL_POINTER = 4,
  PR_STATUS_BUFFER_TOO_SMALL = 5,
  PR_STATUS_PANIC = 6,
} PrStatus;

/**
 * One solved region point.
 */
typedef struct PrPoint PrPoint;

/**
 * A privacy problem.
 */
typedef struct PrProblem PrProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *pr_version(void);

/**
 * Bytes needed for the last error message including the NUL; 0 if none.
 */
size_t pr_last_error_length(void);

/**
 * Copy the last error message of this thread into `buf`.
 *
 * # Safety
 * `buf` must be valid for `len` bytes.
 */
enum PrStatus pr_last_error_message(char *buf, size_t len);

/**
 * Census problem over one attribute with Hamming distortion.
 * `u_card = 0` picks the default cardinality.
 *
 * # Safety
 * `probs` must be valid for `n` reads and `out` for one write.
 */
enum PrStatus pr_problem_census(const double *probs,
                                size_t n,
                                size_t u_card,
                                struct PrProblem **out);

/**
 * Problem from its JSON description.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` valid for one write.
 */
enum PrStatus pr_problem_from_json(const char *json, struct PrProblem **out);

/**
 * # Safety
 * `p` must come from a `pr_problem_*` constructor and not be freed twice.
 */
void pr_problem_free(struct PrProblem *p);

/**
 * Frontier point at distortion `d`.
 *
 * # Safety
 * `prob` must be a live handle and `out` valid for one write.
 */
enum PrStatus pr_gamma(const struct PrProblem *prob, double d, uint64_t seed, struct PrPoint **out);

/**
 * Minimum-rate point at distortion `d` and equivocation `e`.
 *
 * # Safety
 * `prob` must be a live handle and `out` valid for one write.
 */
enum PrStatus pr_rate(const struct PrProblem *prob,
                      double d,
                      double e,
                      uint64_t seed,
                      struct PrPoint **out);

/**
 * Rate, distortion and equivocation of a point. Any output may be null.
 *
 * # Safety
 * `p` must be a live handle; non-null outputs valid for one write.
 */
enum PrStatus pr_point_metrics(const struct PrPoint *p,
                               double *rate,
                               double *distortion,
                               double *equivocation);

/**
 * Copy the row-major channel matrix into `buf`. `n_in`/`n_out` receive the
 * shape (either may be null); with `buf` null only the shape is reported.
 *
 * # Safety
 * `p` must be a live handle; `buf` valid for `len` writes when non-null.
 */
enum PrStatus pr_point_channel(const struct PrPoint *p,
                               double *buf,
                               size_t len,
                               size_t *n_in,
                               size_t *n_out);

/**
 * # Safety
 * `p` must come from `pr_gamma`/`pr_rate` and not be freed twice.
 */
void pr_point_free(struct PrPoint *p);

/**
 * Hamming rate-distortion function of `probs` at distortion `d`.
 *
 * # Safety
 * `probs` valid for `n` reads, `rate` for one write.
 */
enum PrStatus pr_rd_hamming(const double *probs, size_t n, double d, double *rate);

/**
 * Closed-form Hamming solution: water level, exact frontier value and rate.
 * Any output may be null.
 *
 * # Safety
 * `probs` valid for `n` reads; non-null outputs valid for one write.
 */
enum PrStatus pr_waterfill(const double *probs,
                           size_t n,
                           double d,
                           double *lambda,
                           double *gamma,
                           double *rate);

/**
 * Add Laplace noise with scale `sensitivity / epsilon` to `n` values.
 * `out` may alias `values`.
 *
 * # Safety
 * `values` valid for `n` reads and `out` for `n` writes.
 */
enum PrStatus pr_laplace(const double *values,
                         size_t n,
                         double epsilon,
                         double sensitivity,
                         uint64_t seed,
                         double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PRIVREGION_H */
