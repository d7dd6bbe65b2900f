#ifndef FRESHSIM_H
#define FRESHSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define FRESHSIM_KIND_LINEAR 0

#define FRESHSIM_KIND_EXPONENTIAL 1

#define FRESHSIM_KIND_LOGARITHMIC 2

#define FRESHSIM_OBJECTIVE_MIN_COUD 0

#define FRESHSIM_OBJECTIVE_MAX_VOIU 1

typedef enum FreshsimStatus {
  FRESHSIM_STATUS_OK = 0,
  FRESHSIM_STATUS_INVALID_ARGUMENT = 1,
  FRESHSIM_STATUS_NULL_POINTER = 2,
  FRESHSIM_STATUS_UNSTABLE_QUEUE = 3,
  FRESHSIM_STATUS_DOMAIN = 4,
  FRESHSIM_STATUS_OVERFLOW = 5,
  FRESHSIM_STATUS_NO_CONVERGENCE = 6,
  FRESHSIM_STATUS_INSUFFICIENT_DATA = 7,
  FRESHSIM_STATUS_OUT_OF_RANGE = 8,
  FRESHSIM_STATUS_INTERNAL = 9,
} FreshsimStatus;

/**
 * Opaque simulation result.
 */
typedef struct FreshsimSimulation FreshsimSimulation;

/**
 * Analytic averages at one operating point. `avg_coud` is `+inf` when the
 * exponential average does not exist; `valid` is then 0.
 */
typedef struct FreshsimAnalytic {
  double avg_coud;
  double avg_voiu_rate;
  double mean_voiu;
  int32_t valid;
} FreshsimAnalytic;

typedef struct FreshsimOptimum {
  double rho_star;
  double value_at_star;
  double bracket_lo;
  double bracket_hi;
  uint64_t iterations;
} FreshsimOptimum;

typedef struct FreshsimSummary {
  uint64_t replications;
  uint64_t n_updates;
  uint64_t n_measured;
  double elapsed;
  double avg_coud;
  double avg_voiu_rate;
  double mean_voiu;
  double ci_halfwidth_coud;
  double ci_halfwidth_voiu;
  double effective_rate;
  double whole_run_coud;
  double whole_run_voiu_rate;
  double mean_interarrival;
  double mean_system_time;
} FreshsimSummary;

/**
 * One delivered update.
 */
typedef struct FreshsimRecord {
  uint64_t i;
  double t_gen;
  double t_recv;
  double interarrival;
  double system_time;
  double voiu;
  double area;
} FreshsimRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *freshsim_version(void);

/**
 * Message of the last failure on this thread, or NULL if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *freshsim_last_error_message(void);

/**
 * Cost `f(elapsed)`.
 *
 * # Safety
 * `out` must be NULL or valid for writes.
 */
enum FreshsimStatus freshsim_cost(int32_t kind, double alpha, double elapsed, double *out);

/**
 * Value of information of an update with interarrival `y` and system time `t`.
 *
 * # Safety
 * `out` must be NULL or valid for writes.
 */
enum FreshsimStatus freshsim_voiu(int32_t kind, double alpha, double y, double t, double *out);

/**
 * Area under the cost curve between consecutive receptions.
 *
 * # Safety
 * `out` must be NULL or valid for writes.
 */
enum FreshsimStatus freshsim_area(int32_t kind, double alpha, double y, double t, double *out);

/**
 * Analytic averages for arrival rate `lambda` and service rate `mu`.
 *
 * # Safety
 * `out` must be NULL or valid for writes.
 */
enum FreshsimStatus freshsim_analytic(int32_t kind,
                                      double alpha,
                                      double lambda,
                                      double mu,
                                      struct FreshsimAnalytic *out);

/**
 * Golden-section search over utilization on the default bracket.
 *
 * # Safety
 * `out` must be NULL or valid for writes.
 */
enum FreshsimStatus freshsim_optimize(int32_t objective,
                                      int32_t kind,
                                      double alpha,
                                      double mu,
                                      double tol,
                                      struct FreshsimOptimum *out);

/**
 * Runs one replication delivering `updates` updates and stores the handle in
 * `*out`. Release it with [`freshsim_simulation_free`].
 *
 * # Safety
 * `out` must be NULL or valid for writes.
 */
enum FreshsimStatus freshsim_simulation_run(int32_t kind,
                                            double alpha,
                                            double lambda,
                                            double mu,
                                            uint64_t updates,
                                            uint64_t seed,
                                            double warmup_fraction,
                                            double initial_cost,
                                            struct FreshsimSimulation **out);

/**
 * Pooled summary of `replications >= 2` independent runs.
 *
 * # Safety
 * `out` must be NULL or valid for writes.
 */
enum FreshsimStatus freshsim_replications(int32_t kind,
                                          double alpha,
                                          double lambda,
                                          double mu,
                                          uint64_t updates,
                                          uint64_t seed,
                                          uint64_t replications,
                                          struct FreshsimSummary *out);

/**
 * # Safety
 * `sim` must be NULL or a live handle; `out` must be NULL or valid for writes.
 */
enum FreshsimStatus freshsim_simulation_summary(const struct FreshsimSimulation *sim,
                                                struct FreshsimSummary *out);

/**
 * Number of records held by `sim`; 0 for NULL.
 *
 * # Safety
 * `sim` must be NULL or a live handle.
 */
size_t freshsim_simulation_record_count(const struct FreshsimSimulation *sim);

/**
 * # Safety
 * `sim` must be NULL or a live handle; `out` must be NULL or valid for writes.
 */
enum FreshsimStatus freshsim_simulation_record(const struct FreshsimSimulation *sim,
                                               size_t index,
                                               struct FreshsimRecord *out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `sim` must be NULL or a handle from [`freshsim_simulation_run`] that has
 * not been freed yet.
 */
void freshsim_simulation_free(struct FreshsimSimulation *sim);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRESHSIM_H */
