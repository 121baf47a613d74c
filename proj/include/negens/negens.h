/*
 * negens: ensemble combination rules for classifier predictions.
 *
 * C interface to the negens shared library. All objects are opaque handles
 * created by a *_load / *_start / combine call and released by the matching
 * *_free. Every fallible call returns a negens_status; on failure a message
 * describing the problem is available from negens_last_error() on the same
 * thread until the next failing call.
 */
#ifndef NEGENS_NEGENS_H_
#define NEGENS_NEGENS_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(NEGENS_BUILDING_LIBRARY)
#    define NEGENS_API __declspec(dllexport)
#  else
#    define NEGENS_API __declspec(dllimport)
#  endif
#else
#  define NEGENS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum negens_status {
  NEGENS_OK = 0,
  NEGENS_ERR_VALIDATION = 1,
  NEGENS_ERR_ALIGNMENT = 2,
  NEGENS_ERR_PARSE = 3,
  NEGENS_ERR_IO = 4,
  NEGENS_ERR_NOT_FOUND = 5,
  NEGENS_ERR_INVALID_ARGUMENT = 6,
  NEGENS_ERR_INTERNAL = 7
} negens_status;

typedef enum negens_method {
  NEGENS_METHOD_TOP_MODEL = 0,
  NEGENS_METHOD_AVERAGE = 1,
  NEGENS_METHOD_PRODUCT = 2,
  NEGENS_METHOD_NEGATION = 3
} negens_method;

typedef enum negens_tie_policy {
  /* Higher mean raw confidence wins, then the lowest class index. */
  NEGENS_TIE_MEAN_CONFIDENCE = 0,
  NEGENS_TIE_LOWEST_INDEX = 1
} negens_tie_policy;

typedef enum negens_report_format {
  NEGENS_FORMAT_TEXT = 0,
  NEGENS_FORMAT_CSV = 1
} negens_report_format;

typedef struct negens_decision negens_decision;
typedef struct negens_ensemble negens_ensemble;
typedef struct negens_labels negens_labels;
typedef struct negens_report negens_report;
typedef struct negens_server negens_server;

NEGENS_API const char* negens_last_error(void);
NEGENS_API const char* negens_version(void);

/* Names as used on the command line: top, average, product, negation. */
NEGENS_API negens_status negens_parse_method(const char* name,
                                             negens_method* out);
NEGENS_API const char* negens_method_name(negens_method method);
/* mean-conf, lowest-index */
NEGENS_API negens_status negens_parse_tie_policy(const char* name,
                                                 negens_tie_policy* out);

NEGENS_API negens_status negens_weighted_confidence(double confidence,
                                                    double accuracy,
                                                    double* out);

/* `confidences` is model_count x class_count, row-major, one row per model;
 * `accuracies` has model_count entries. */
NEGENS_API negens_status negens_combine(const double* confidences,
                                        const double* accuracies,
                                        size_t model_count, size_t class_count,
                                        negens_method method,
                                        negens_tie_policy tie_policy,
                                        negens_decision** out);

NEGENS_API negens_method negens_decision_method(const negens_decision* d);
NEGENS_API size_t negens_decision_predicted(const negens_decision* d);
NEGENS_API int negens_decision_tie_broken(const negens_decision* d);
NEGENS_API size_t negens_decision_class_count(const negens_decision* d);
/* class_count scores, owned by the decision. */
NEGENS_API const double* negens_decision_scores(const negens_decision* d);
/* class_count class indices, best first, owned by the decision. */
NEGENS_API const size_t* negens_decision_ranking(const negens_decision* d);
NEGENS_API void negens_decision_free(negens_decision* d);

/* Loads a manifest and every prediction file it lists, aligned by sample. */
NEGENS_API negens_status negens_ensemble_load(const char* manifest_path,
                                              negens_ensemble** out);
NEGENS_API size_t negens_ensemble_model_count(const negens_ensemble* e);
NEGENS_API size_t negens_ensemble_class_count(const negens_ensemble* e);
NEGENS_API size_t negens_ensemble_sample_count(const negens_ensemble* e);
/* Nonzero when fewer than three models are listed. */
NEGENS_API int negens_ensemble_few_models(const negens_ensemble* e);
NEGENS_API const char* negens_ensemble_model_id(const negens_ensemble* e,
                                                size_t index);
NEGENS_API double negens_ensemble_model_accuracy(const negens_ensemble* e,
                                                 size_t index);
NEGENS_API const char* negens_ensemble_sample_id(const negens_ensemble* e,
                                                 size_t index);
/* NULL when the manifest has no class-name sidecar or index is past it. */
NEGENS_API const char* negens_ensemble_class_name(const negens_ensemble* e,
                                                  size_t class_index);
NEGENS_API size_t negens_ensemble_top_model(const negens_ensemble* e);
NEGENS_API negens_status negens_ensemble_combine(const negens_ensemble* e,
                                                 const char* sample_id,
                                                 negens_method method,
                                                 negens_tie_policy tie_policy,
                                                 negens_decision** out);
NEGENS_API void negens_ensemble_free(negens_ensemble* e);

NEGENS_API negens_status negens_labels_load(const char* path,
                                            negens_labels** out);
NEGENS_API size_t negens_labels_count(const negens_labels* l);
NEGENS_API void negens_labels_free(negens_labels* l);

/* One row per requested method in the fixed order top, average, product,
 * negation. Every sample must be labeled and every label must have a sample. */
NEGENS_API negens_status negens_compare(const negens_ensemble* e,
                                        const negens_labels* labels,
                                        const negens_method* methods,
                                        size_t method_count,
                                        negens_tie_policy tie_policy,
                                        negens_report** out);
NEGENS_API size_t negens_report_row_count(const negens_report* r);
NEGENS_API negens_status negens_report_row(const negens_report* r,
                                           size_t index, negens_method* method,
                                           size_t* matches, size_t* total);
/* *out is NUL-terminated and released with negens_string_free. */
NEGENS_API negens_status negens_report_render(const negens_report* r,
                                              negens_report_format format,
                                              char** out, size_t* length);
NEGENS_API void negens_report_free(negens_report* r);
NEGENS_API void negens_string_free(char* s);

typedef struct negens_model_profile {
  double target_accuracy;   /* (0, 1) */
  double sharpness;         /* > 0 */
  double noise_correlation; /* [0, 1] */
  double truth_runner_up;   /* [0, 1]; 1 keeps the truth second on errors */
} negens_model_profile;

/* Generates a synthetic dataset and writes model-<n>.jsonl, labels.csv and
 * manifest.json into out_dir. realized_accuracy, when not NULL, receives
 * profile_count measured accuracies. */
NEGENS_API negens_status negens_simulate(const negens_model_profile* profiles,
                                         size_t profile_count,
                                         size_t class_count,
                                         size_t sample_count, uint64_t seed,
                                         const char* out_dir,
                                         double* realized_accuracy);

typedef void (*negens_log_fn)(const char* line, void* user);

/* Starts the aggregation service on a background thread. port 0 picks a free
 * port; log may be NULL. The NEGENS_SERVICE_CONFIG environment variable, when
 * set and nonempty, replaces config_path (which may then be NULL). */
NEGENS_API negens_status negens_service_start(const char* config_path,
                                              const char* host, int port,
                                              negens_log_fn log, void* user,
                                              negens_server** out);
/* Starts a mock model endpoint serving the given fixture file. */
NEGENS_API negens_status negens_mock_model_start(const char* fixture_path,
                                                 const char* host, int port,
                                                 negens_log_fn log, void* user,
                                                 negens_server** out);
NEGENS_API int negens_server_port(const negens_server* s);
NEGENS_API void negens_server_stop(negens_server* s);
/* Stops the server if it is still running. */
NEGENS_API void negens_server_free(negens_server* s);

#ifdef __cplusplus
}
#endif

#endif /* NEGENS_NEGENS_H_ */
