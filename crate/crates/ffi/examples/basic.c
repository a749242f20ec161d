/* Drives one episode through the C API: FIFO-style by hand, then a heuristic. */
#include <stdio.h>

#include "dagsched.h"

#define CHECK(call)                                                       \
    do {                                                                  \
        enum DagschedStatus st_ = (call);                                 \
        if (st_ != DAGSCHED_STATUS_OK) {                                  \
            fprintf(stderr, "%s failed (%d): %s\n", #call, (int)st_,      \
                    dagsched_last_error());                               \
            return 1;                                                     \
        }                                                                 \
    } while (0)

int main(void) {
    DagschedEnv *env = NULL;
    CHECK(dagsched_env_new_tpch(4, 8, false, 7, &env));

    size_t n_exec = 0;
    CHECK(dagsched_env_num_executors(env, &n_exec));
    bool done = false;
    double total = 0.0;
    CHECK(dagsched_env_is_done(env, &done));
    while (!done) {
        size_t job = 0, stage = 0;
        double r = 0.0;
        CHECK(dagsched_env_frontier_get(env, 0, &job, &stage));
        CHECK(dagsched_env_step(env, job, stage, n_exec, -1, &r));
        total += r;
        CHECK(dagsched_env_is_done(env, &done));
    }
    double manual = 0.0;
    CHECK(dagsched_env_average_jct(env, &manual));

    CHECK(dagsched_env_reset(env));
    double fair = 0.0;
    CHECK(dagsched_env_run_heuristic(env, "fair", &fair));

    if (dagsched_env_run_heuristic(env, "nope", &fair) != DAGSCHED_STATUS_INVALID_ARGUMENT) {
        fprintf(stderr, "unknown heuristic accepted\n");
        return 1;
    }
    printf("version %s\n", dagsched_version());
    printf("first-stage avg_jct %.6f return %.6f\n", manual, total);
    printf("fair avg_jct %.6f\n", fair);
    dagsched_env_free(env);
    return 0;
}
