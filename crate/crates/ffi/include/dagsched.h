#ifndef DAGSCHED_H
#define DAGSCHED_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum DagschedStatus {
  DAGSCHED_STATUS_OK = 0,
  DAGSCHED_STATUS_NULL_POINTER = 1,
  DAGSCHED_STATUS_INVALID_ARGUMENT = 2,
  DAGSCHED_STATUS_INVALID_CONFIG = 3,
  DAGSCHED_STATUS_PARSE = 4,
  DAGSCHED_STATUS_VALIDATION = 5,
  DAGSCHED_STATUS_ILLEGAL_ACTION = 6,
  DAGSCHED_STATUS_SHAPE = 7,
  DAGSCHED_STATUS_USAGE = 8,
  DAGSCHED_STATUS_REFUSED = 9,
  DAGSCHED_STATUS_NON_FINITE = 10,
  DAGSCHED_STATUS_IO = 11,
  DAGSCHED_STATUS_PANIC = 12,
} DagschedStatus;

/**
 * A simulated cluster with its workload. Opaque to C.
 */
typedef struct DagschedEnv DagschedEnv;

/**
 * A trained policy loaded from a checkpoint. Opaque to C.
 */
typedef struct DagschedPolicy DagschedPolicy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *dagsched_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dagsched_version(void);

/**
 * Creates an environment over a batch of `num_jobs` synthetic TPC-H-like
 * jobs drawn with `seed`. `multi_resource` selects the four memory classes.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum DagschedStatus dagsched_env_new_tpch(size_t num_jobs,
                                          size_t num_executors,
                                          bool multi_resource,
                                          uint64_t seed,
                                          struct DagschedEnv **out);

/**
 * Creates an environment from a JSON trace document.
 *
 * # Safety
 * `trace_json` must be a NUL-terminated string; `out` as for
 * [`dagsched_env_new_tpch`].
 */
enum DagschedStatus dagsched_env_from_trace(const char *trace_json,
                                            size_t num_executors,
                                            bool multi_resource,
                                            uint64_t seed,
                                            struct DagschedEnv **out);

/**
 * Releases an environment. Null is ignored.
 *
 * # Safety
 * `env` must come from a constructor of this library and not be used again.
 */
void dagsched_env_free(struct DagschedEnv *env);

/**
 * Restores the state the environment was created with.
 *
 * # Safety
 * `env` must be a live handle.
 */
enum DagschedStatus dagsched_env_reset(struct DagschedEnv *env);

/**
 * # Safety
 * `env` must be a live handle and `out` writable.
 */
enum DagschedStatus dagsched_env_clock(const struct DagschedEnv *env, double *out);

/**
 * True once every job has completed.
 *
 * # Safety
 * `env` must be a live handle and `out` writable.
 */
enum DagschedStatus dagsched_env_is_done(const struct DagschedEnv *env, bool *out);

/**
 * # Safety
 * `env` must be a live handle and `out` writable.
 */
enum DagschedStatus dagsched_env_num_executors(const struct DagschedEnv *env, size_t *out);

/**
 * Number of stages a decision may currently pick.
 *
 * # Safety
 * `env` must be a live handle and `out` writable.
 */
enum DagschedStatus dagsched_env_frontier_len(const struct DagschedEnv *env, size_t *out);

/**
 * The `index`-th schedulable stage as (job index, stage index).
 *
 * # Safety
 * `env` must be a live handle; `job` and `stage` writable.
 */
enum DagschedStatus dagsched_env_frontier_get(const struct DagschedEnv *env,
                                              size_t index,
                                              size_t *job,
                                              size_t *stage);

/**
 * Applies one decision and advances to the next decision point. `class` is
 * the executor class in multi-resource mode and negative otherwise. The
 * reward accrued until the next decision goes to `reward`, which may be null.
 *
 * # Safety
 * `env` must be a live handle; `reward` null or writable.
 */
enum DagschedStatus dagsched_env_step(struct DagschedEnv *env,
                                      size_t job,
                                      size_t stage,
                                      size_t limit,
                                      int64_t class_,
                                      double *reward);

/**
 * Average job completion time over the jobs completed so far.
 *
 * # Safety
 * `env` must be a live handle and `out` writable.
 */
enum DagschedStatus dagsched_env_average_jct(const struct DagschedEnv *env, double *out);

/**
 * Runs the named heuristic from the current state to the end of the episode
 * and reports the average job completion time.
 *
 * # Safety
 * `env` must be a live handle, `name` NUL-terminated and `avg_jct` writable.
 */
enum DagschedStatus dagsched_env_run_heuristic(struct DagschedEnv *env,
                                               const char *name,
                                               double *avg_jct);

/**
 * Loads the policy stored in a training checkpoint file.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` writable.
 */
enum DagschedStatus dagsched_policy_load(const char *path, struct DagschedPolicy **out);

/**
 * Releases a policy. Null is ignored.
 *
 * # Safety
 * `policy` must come from [`dagsched_policy_load`] and not be used again.
 */
void dagsched_policy_free(struct DagschedPolicy *policy);

/**
 * The policy's greedy decision for the current state. `class` receives -1
 * outside multi-resource mode.
 *
 * # Safety
 * Handles must be live; all out-pointers writable.
 */
enum DagschedStatus dagsched_policy_decide(const struct DagschedPolicy *policy,
                                           const struct DagschedEnv *env,
                                           size_t *job,
                                           size_t *stage,
                                           size_t *limit,
                                           int64_t *class_);

/**
 * Runs the policy greedily to the end of the episode.
 *
 * # Safety
 * Handles must be live; `avg_jct` writable.
 */
enum DagschedStatus dagsched_policy_run(const struct DagschedPolicy *policy,
                                        struct DagschedEnv *env,
                                        double *avg_jct);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DAGSCHED_H */
