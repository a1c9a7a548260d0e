/* graphcf — rating prediction with graph-based implicit feedback.
 *
 * C interface to the experiment engine. Handles are opaque; every fallible
 * call returns a graphcf_status, and the failing handle keeps the full error
 * text until the next call on it. All functions are safe to call from C.
 */
#ifndef GRAPHCF_H
#define GRAPHCF_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define GRAPHCF_API __declspec(dllexport)
#else
#define GRAPHCF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum graphcf_status {
  GRAPHCF_OK = 0,
  GRAPHCF_INVALID_ARGUMENT = 1,
  GRAPHCF_PARSE_ERROR = 2,
  GRAPHCF_IO_ERROR = 3,
  GRAPHCF_CONFIG_ERROR = 4,
  GRAPHCF_STATE_ERROR = 5,
  GRAPHCF_NUMERIC_ERROR = 6,
  GRAPHCF_INTERNAL_ERROR = 7
} graphcf_status;

/* Library version as "major.minor.patch". */
GRAPHCF_API const char* graphcf_version(void);

/* Stable lowercase name for a status code ("ok", "config_error", ...). */
GRAPHCF_API const char* graphcf_status_name(graphcf_status status);

/* Every config key with its default and a one-line description. */
GRAPHCF_API const char* graphcf_config_help(void);

/* Comma-separated list of the commands graphcf_experiment_run accepts. */
GRAPHCF_API const char* graphcf_command_list(void);

/* ---- experiments ---------------------------------------------------------
 *
 * An experiment is a config (key/value settings) plus the commands that act
 * on it: prepare, sample, train, evaluate, analyze, gradcheck. Progress text
 * goes to the writer callback if one is installed, otherwise it is dropped.
 */
typedef struct graphcf_experiment graphcf_experiment;

typedef void (*graphcf_write_fn)(const char* text, size_t length,
                                 void* user_data);

/* Returns NULL only on allocation failure. */
GRAPHCF_API graphcf_experiment* graphcf_experiment_new(void);
GRAPHCF_API void graphcf_experiment_free(graphcf_experiment* exp);

/* Install a sink for progress output (NULL fn silences it again). */
GRAPHCF_API void graphcf_experiment_set_writer(graphcf_experiment* exp,
                                               graphcf_write_fn fn,
                                               void* user_data);

/* Load "key = value" lines; '#' starts a comment. Unknown keys fail. */
GRAPHCF_API graphcf_status graphcf_experiment_load_file(
    graphcf_experiment* exp, const char* path);

/* Set one key. Later sets win over earlier sets and over loaded files. */
GRAPHCF_API graphcf_status graphcf_experiment_set(graphcf_experiment* exp,
                                                  const char* key,
                                                  const char* value);

/* Get the current value of one key (its default if never set). The pointer
 * stays valid until the next call on this experiment. NULL if unknown. */
GRAPHCF_API const char* graphcf_experiment_get(graphcf_experiment* exp,
                                               const char* key);

/* Run one command. Reads and writes under the "out.dir" key's directory. */
GRAPHCF_API graphcf_status graphcf_experiment_run(graphcf_experiment* exp,
                                                  const char* command);

/* Text of the last failure on this handle; "" when the last call succeeded. */
GRAPHCF_API const char* graphcf_experiment_last_error(
    const graphcf_experiment* exp);

/* ---- predictors ----------------------------------------------------------
 *
 * A predictor loads the trained snapshot and feedback tables back out of an
 * experiment directory (the "out.dir" a train run wrote into) and scores
 * (user, item) pairs on the normalized [0, 1] rating scale.
 */
typedef struct graphcf_predictor graphcf_predictor;

/* On failure *out is still set to a handle (unless allocation itself failed)
 * so the error text can be read from it; free it either way. */
GRAPHCF_API graphcf_status graphcf_predictor_open(const char* out_dir,
                                                  graphcf_predictor** out);
GRAPHCF_API void graphcf_predictor_free(graphcf_predictor* pred);

GRAPHCF_API graphcf_status graphcf_predictor_predict(graphcf_predictor* pred,
                                                     int32_t user,
                                                     int32_t item,
                                                     double* out_score);

GRAPHCF_API int32_t graphcf_predictor_users(const graphcf_predictor* pred);
GRAPHCF_API int32_t graphcf_predictor_items(const graphcf_predictor* pred);

/* Model kind name ("mf", "svdpp", "a-gcf2", ...). */
GRAPHCF_API const char* graphcf_predictor_model(const graphcf_predictor* pred);

GRAPHCF_API const char* graphcf_predictor_last_error(
    const graphcf_predictor* pred);

#ifdef __cplusplus
}
#endif

#endif /* GRAPHCF_H */
