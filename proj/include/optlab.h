/* C interface to the optlab shared library. Handles are opaque; every entry
 * point returns a status code (or NULL) on failure and leaves a thread-local
 * message readable through optlab_last_error(). */

#ifndef OPTLAB_H
#define OPTLAB_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
    OPTLAB_OK = 0,
    OPTLAB_E_VERDICT = 1, /* run finished, at least one verdict failed */
    OPTLAB_E_CONFIG = 2,  /* bad config, unknown name, or build failure */
    OPTLAB_E_IO = 3,
    OPTLAB_E_INTERNAL = 4
} optlab_status;

typedef struct optlab_experiment optlab_experiment; /* a runnable reproduction */
typedef struct optlab_result optlab_result;

/* Catalog of named reproductions. */
int optlab_catalog_count(void);
const char* optlab_catalog_name(int index);
const char* optlab_catalog_description(int index);

/* NULL on failure (see optlab_last_error). */
optlab_experiment* optlab_experiment_from_catalog(const char* name);
optlab_experiment* optlab_experiment_from_config(const char* json_text);
void optlab_experiment_free(optlab_experiment* exp);

/* Parse + build + certify the configured instance without running it. */
int optlab_validate_config(const char* json_text);

/* workers <= 0 selects the available hardware parallelism. */
optlab_result* optlab_run(const optlab_experiment* exp, int workers);
void optlab_result_free(optlab_result* res);

int optlab_result_failed_verdicts(const optlab_result* res);
/* Writes <experiment_id>.csv, <experiment_id>.aggregate.csv and summary.json
 * under out_dir. Returns a status code. */
int optlab_result_emit(const optlab_result* res, const char* out_dir);

const char* optlab_last_error(void);

#ifdef __cplusplus
}
#endif

#endif /* OPTLAB_H */
