#ifndef PERSUASION_H
#define PERSUASION_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum PersuasionStatus {
  PERSUASION_STATUS_OK = 0,
  PERSUASION_STATUS_NULL_POINTER = 1,
  PERSUASION_STATUS_DOMAIN = 2,
  PERSUASION_STATUS_INVALID_DISTRIBUTION = 3,
  PERSUASION_STATUS_INFEASIBLE_BIAS = 4,
  PERSUASION_STATUS_NO_ROOT = 5,
  PERSUASION_STATUS_INFEASIBLE_PROTOCOL = 6,
  PERSUASION_STATUS_PARSE = 7,
  PERSUASION_STATUS_INTERNAL = 8,
} PersuasionStatus;

/**
 * Root selection for the silence posterior.
 */
typedef enum PersuasionBranch {
  PERSUASION_BRANCH_SMALLEST = 0,
  PERSUASION_BRANCH_LARGEST = 1,
  PERSUASION_BRANCH_UPPER_HALF = 2,
} PersuasionBranch;

/**
 * Opaque cost distribution.
 */
typedef struct PersuasionDist PersuasionDist;

/**
 * Opaque model parameters (prior, bias, friction).
 */
typedef struct PersuasionModel PersuasionModel;

/**
 * Binary (or degenerate) posterior law.
 */
typedef struct PersuasionLaw {
  double lo;
  double hi;
  /**
   * Probability of `hi`.
   */
  double weight_hi;
} PersuasionLaw;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *persuasion_last_error(void);

/**
 * Library version as a static string.
 */
const char *persuasion_version(void);

/**
 * Uniform costs on `[lo, hi]`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum PersuasionStatus persuasion_dist_uniform(double lo, double hi, struct PersuasionDist **out);

/**
 * Uniform costs on `[0, scale]`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum PersuasionStatus persuasion_dist_scaled_uniform(double scale, struct PersuasionDist **out);

/**
 * `hi * Beta(alpha, beta)`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum PersuasionStatus persuasion_dist_beta(double alpha,
                                           double beta,
                                           double hi,
                                           struct PersuasionDist **out);

/**
 * Any family from its JSON form, e.g. `{"family":"uniform","lo":0,"hi":1}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum PersuasionStatus persuasion_dist_from_json(const char *json, struct PersuasionDist **out_ptr);

/**
 * Releases a distribution. Null is ignored.
 *
 * # Safety
 * `d` must come from a `persuasion_dist_*` constructor and not be freed twice.
 */
void persuasion_dist_free(struct PersuasionDist *d);

/**
 * `F(x)` for `x >= 0`.
 *
 * # Safety
 * `d` must be a live handle; `out` must be valid for writes.
 */
enum PersuasionStatus persuasion_dist_cdf(const struct PersuasionDist *d,
                                          double x,
                                          double *out_ptr);

/**
 * Model with prior `prior`, bias `b` and evidence friction `epsilon`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum PersuasionStatus persuasion_model_new(double prior,
                                           double b,
                                           double epsilon,
                                           struct PersuasionModel **out_ptr);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `m` must come from [`persuasion_model_new`] and not be freed twice.
 */
void persuasion_model_free(struct PersuasionModel *m);

/**
 * Share of receivers who verify at belief `mu`.
 *
 * # Safety
 * `d` must be a live handle; `out` must be valid for writes.
 */
enum PersuasionStatus persuasion_verifying_mass(const struct PersuasionDist *d,
                                                double mu,
                                                double *out_ptr);

/**
 * Sender's expected payoff at belief `mu` with bias `b`.
 *
 * # Safety
 * `d` must be a live handle; `out` must be valid for writes.
 */
enum PersuasionStatus persuasion_indirect_value(const struct PersuasionDist *d,
                                                double mu,
                                                double b,
                                                double *out_ptr);

/**
 * Silence posterior solving `(1 - lambda(mu)) mu = 2b` on the given branch.
 *
 * # Safety
 * `d` must be a live handle; `out` must be valid for writes.
 */
enum PersuasionStatus persuasion_silence_posterior(const struct PersuasionDist *d,
                                                   double b,
                                                   enum PersuasionBranch branch,
                                                   double *out_ptr);

/**
 * Optimal experiment for the indirect value on a grid of `grid_points`.
 * A point mass comes back as `lo == hi == prior`, `weight_hi == 1`.
 *
 * # Safety
 * `m` and `d` must be live handles; `out` must be valid for writes.
 */
enum PersuasionStatus persuasion_optimal_experiment(const struct PersuasionModel *m,
                                                    const struct PersuasionDist *d,
                                                    size_t grid_points,
                                                    struct PersuasionLaw *out_ptr);

/**
 * Unconstrained quadratic falsification of aggregate `a` towards `target`.
 *
 * # Safety
 * `d_star` and `loss` must be valid for writes.
 */
enum PersuasionStatus persuasion_falsify_quadratic(double a,
                                                   double target,
                                                   double kappa,
                                                   double *d_star,
                                                   double *loss);

/**
 * Monte Carlo verifying mass at `(mu, state)`; `state` is 0 or 1.
 *
 * # Safety
 * `d` must be a live handle; `lambda_hat` and `se` must be valid for writes.
 */
enum PersuasionStatus persuasion_simulate_verification(const struct PersuasionDist *d,
                                                       double mu,
                                                       uint32_t state,
                                                       size_t n,
                                                       uint64_t seed,
                                                       size_t replications,
                                                       double *lambda_hat,
                                                       double *se);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PERSUASION_H */
