#ifndef MAXENT_H
#define MAXENT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MaxentStatus {
  MAXENT_STATUS_OK = 0,
  MAXENT_STATUS_NULL_POINTER = 1,
  MAXENT_STATUS_INVALID_INPUT = 2,
  MAXENT_STATUS_INFEASIBLE = 3,
  MAXENT_STATUS_BUFFER_TOO_SMALL = 4,
  MAXENT_STATUS_PANIC = 5,
} MaxentStatus;

/**
 * Opaque problem builder.
 */
typedef struct MaxentProblem MaxentProblem;

/**
 * Opaque solved problem.
 */
typedef struct MaxentSolution MaxentSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after success.
 * The pointer stays valid until the next call into this library.
 */
const char *maxent_last_error(void);

/**
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum MaxentStatus maxent_problem_new_continuous(double a,
                                                double b,
                                                size_t nodes,
                                                struct MaxentProblem **out);

/**
 * # Safety
 * `points` must point to `len` readable doubles; `out` to a handle slot.
 */
enum MaxentStatus maxent_problem_new_discrete(const double *points,
                                              size_t len,
                                              struct MaxentProblem **out);

/**
 * # Safety
 * `problem` must be null or a handle from `maxent_problem_new_*`.
 */
void maxent_problem_free(struct MaxentProblem *problem);

/**
 * Adds E[x^k] = target.
 *
 * # Safety
 * `problem` must be a live problem handle.
 */
enum MaxentStatus maxent_problem_add_power(struct MaxentProblem *problem,
                                           uint32_t k,
                                           double target);

/**
 * Adds lo ≤ E[x^k] ≤ hi.
 *
 * # Safety
 * `problem` must be a live problem handle.
 */
enum MaxentStatus maxent_problem_add_power_interval(struct MaxentProblem *problem,
                                                    uint32_t k,
                                                    double lo,
                                                    double hi);

/**
 * Adds P(from ≤ X ≤ to) = target.
 *
 * # Safety
 * `problem` must be a live problem handle.
 */
enum MaxentStatus maxent_problem_add_indicator(struct MaxentProblem *problem,
                                               double from,
                                               double to,
                                               double target);

/**
 * Adds lo ≤ P(from ≤ X ≤ to) ≤ hi.
 *
 * # Safety
 * `problem` must be a live problem handle.
 */
enum MaxentStatus maxent_problem_add_indicator_interval(struct MaxentProblem *problem,
                                                        double from,
                                                        double to,
                                                        double lo,
                                                        double hi);

/**
 * Adds E[h] = target for h tabulated at every grid node. `derivative` may
 * be null.
 *
 * # Safety
 * `problem` must be a live handle; `values` (and `derivative` when not
 * null) must point to `len` readable doubles.
 */
enum MaxentStatus maxent_problem_add_tabulated(struct MaxentProblem *problem,
                                               const double *values,
                                               const double *derivative,
                                               size_t len,
                                               double target);

/**
 * Adds an assessed utility point U(x) = u.
 *
 * # Safety
 * `problem` must be a live problem handle.
 */
enum MaxentStatus maxent_problem_add_assessment(struct MaxentProblem *problem, double x, double u);

/**
 * Solves the problem. `tol <= 0` and `max_iter == 0` select the defaults.
 *
 * # Safety
 * `problem` must be a live handle; `out` a valid handle slot.
 */
enum MaxentStatus maxent_solve(const struct MaxentProblem *problem,
                               double tol,
                               size_t max_iter,
                               struct MaxentSolution **out);

/**
 * # Safety
 * `solution` must be null or a handle from `maxent_solve`.
 */
void maxent_solution_free(struct MaxentSolution *solution);

/**
 * Grid node count; 0 for a null handle.
 *
 * # Safety
 * `solution` must be null or a live solution handle.
 */
size_t maxent_solution_node_count(const struct MaxentSolution *solution);

/**
 * Constraint (multiplier) count; 0 for a null handle.
 *
 * # Safety
 * `solution` must be null or a live solution handle.
 */
size_t maxent_solution_constraint_count(const struct MaxentSolution *solution);

/**
 * Entropy in nats; NaN for a null handle.
 *
 * # Safety
 * `solution` must be null or a live solution handle.
 */
double maxent_solution_entropy(const struct MaxentSolution *solution);

/**
 * log Z; NaN for a null handle.
 *
 * # Safety
 * `solution` must be null or a live solution handle.
 */
double maxent_solution_log_partition(const struct MaxentSolution *solution);

/**
 * Grid nodes.
 *
 * # Safety
 * `solution` must be a live handle; `buf` must hold `len` doubles.
 */
enum MaxentStatus maxent_solution_nodes(const struct MaxentSolution *solution,
                                        double *buf,
                                        size_t len);

/**
 * Density (continuous) or mass (discrete) per node.
 *
 * # Safety
 * `solution` must be a live handle; `buf` must hold `len` doubles.
 */
enum MaxentStatus maxent_solution_density(const struct MaxentSolution *solution,
                                          double *buf,
                                          size_t len);

/**
 * Utility curve U per node (the cumulative mass for discrete supports).
 *
 * # Safety
 * `solution` must be a live handle; `buf` must hold `len` doubles.
 */
enum MaxentStatus maxent_solution_curve(const struct MaxentSolution *solution,
                                        double *buf,
                                        size_t len);

/**
 * Arrow–Pratt risk aversion per node; NaN where undefined.
 *
 * # Safety
 * `solution` must be a live handle; `buf` must hold `len` doubles.
 */
enum MaxentStatus maxent_solution_gamma(const struct MaxentSolution *solution,
                                        double *buf,
                                        size_t len);

/**
 * Lagrange multipliers, one per constraint.
 *
 * # Safety
 * `solution` must be a live handle; `buf` must hold `len` doubles.
 */
enum MaxentStatus maxent_solution_multipliers(const struct MaxentSolution *solution,
                                              double *buf,
                                              size_t len);

/**
 * Shannon entropy of `len` masses, in bits when `base2` is set.
 *
 * # Safety
 * `masses` must point to `len` readable doubles; `out` to a writable double.
 */
enum MaxentStatus maxent_discrete_entropy(const double *masses,
                                          size_t len,
                                          bool base2,
                                          double *out);

/**
 * 1/(K−2)!, the volume of admissible utility vectors for K prospects.
 *
 * # Safety
 * `out` must point to a writable double.
 */
enum MaxentStatus maxent_utility_volume(size_t k, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MAXENT_H */
