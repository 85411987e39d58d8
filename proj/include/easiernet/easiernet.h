/*
 * easiernet C interface.
 *
 * All objects are opaque handles created by the library and released with
 * the matching *_free function. Functions returning easiernet_status report
 * failures through the code; easiernet_last_error() then describes the most
 * recent failure on the calling thread.
 */
#ifndef EASIERNET_EASIERNET_H
#define EASIERNET_EASIERNET_H

#include <stddef.h>
#include <stdint.h>

#if defined(EASIERNET_BUILDING_LIBRARY)
#define EASIERNET_API __attribute__((visibility("default")))
#else
#define EASIERNET_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum easiernet_status {
  EASIERNET_OK = 0,
  EASIERNET_ERR_INVALID_ARGUMENT = 1, /* contract violation by the caller */
  EASIERNET_ERR_DATA = 2,             /* malformed or unusable input data */
  EASIERNET_ERR_DEGENERATE_MODEL = 3, /* e.g. all skip factors zero, divergence */
  EASIERNET_ERR_STEP_SIZE = 4,        /* proximal line search underflow */
  EASIERNET_ERR_IO = 5,
  EASIERNET_ERR_INTERNAL = 6
} easiernet_status;

typedef enum easiernet_task {
  EASIERNET_TASK_AUTO = 0,
  EASIERNET_TASK_REGRESSION = 1,
  EASIERNET_TASK_CLASSIFICATION = 2
} easiernet_task;

typedef struct easiernet_dataset easiernet_dataset;
typedef struct easiernet_model easiernet_model;
typedef struct easiernet_cv_result easiernet_cv_result;

typedef struct easiernet_fit_options {
  size_t hidden_layers;     /* default 5 */
  size_t width;             /* default 100 */
  int skip_connections;     /* default 1 */
  double lambda1;
  double lambda2;
  size_t ensemble_size;     /* default 20 */
  uint64_t seed;
  /* Adam phase */
  double learning_rate;     /* default 1e-3 */
  double minibatch_fraction;/* default 1/3 */
  size_t max_epochs;        /* default 2000 */
  size_t patience_epochs;   /* default 10 */
  double rel_tol;           /* default 1e-4 */
  /* proximal phase */
  double prox_initial_step; /* default 1 */
  double prox_backtrack;    /* default 0.5 */
  size_t prox_max_iters;    /* default 500 */
  double prox_param_tol;    /* default 1e-6 */
} easiernet_fit_options;

typedef struct easiernet_cv_options {
  size_t folds;             /* default 4 */
  size_t tuning_members;    /* default 10 */
  const double* lambda1_grid; /* NULL selects the default 5-point grid */
  size_t lambda1_count;
  const double* lambda2_grid;
  size_t lambda2_count;
} easiernet_cv_options;

typedef struct easiernet_cv_candidate {
  double lambda1;
  double lambda2;
  double mean_loss;
  double std_error;
} easiernet_cv_candidate;

typedef struct easiernet_member_report {
  uint64_t seed;
  size_t epochs_run;
  size_t prox_iters_run;
  double final_objective;
  int adam_converged;
  int prox_converged;
  int objective_trace_monotone;
} easiernet_member_report;

typedef struct easiernet_structure {
  size_t active_layer_count;
  double avg_hidden_nodes_per_active_layer;
  size_t support_size;
  int contributions_available; /* 0 when no data was supplied */
  int contributions_degenerate;
} easiernet_structure;

EASIERNET_API const char* easiernet_version(void);
EASIERNET_API const char* easiernet_last_error(void);

EASIERNET_API void easiernet_fit_options_default(easiernet_fit_options* options);
EASIERNET_API void easiernet_cv_options_default(easiernet_cv_options* options);
/* Five log-spaced penalties over [1e-4, 1]; writes up to capacity values and
 * returns the grid length. */
EASIERNET_API size_t easiernet_default_lambda_grid(double* out, size_t capacity);

/* ---- datasets ---------------------------------------------------------- */

/* target may be NULL or "" to select the last column. */
EASIERNET_API easiernet_status easiernet_dataset_load_csv(const char* path, const char* target,
                                                          easiernet_task hint,
                                                          easiernet_dataset** out);
/* Every column except ignore_column (may be NULL) is read as a feature; the
 * dataset has no target. */
EASIERNET_API easiernet_status easiernet_dataset_load_features(const char* path,
                                                               const char* ignore_column,
                                                               easiernet_dataset** out);
EASIERNET_API easiernet_status easiernet_dataset_simulate_additive(size_t num_relevant, size_t d,
                                                                   size_t n, double snr,
                                                                   uint64_t seed,
                                                                   easiernet_dataset** out);
EASIERNET_API easiernet_status easiernet_dataset_simulate_correlated(double rho, size_t n,
                                                                     double snr, uint64_t seed,
                                                                     easiernet_dataset** out);
/* NULL unless the additive design for num_relevant deserves a warning. */
EASIERNET_API const char* easiernet_additive_warning(size_t num_relevant);
EASIERNET_API easiernet_status easiernet_dataset_write_csv(const easiernet_dataset* dataset,
                                                           const char* path);
EASIERNET_API void easiernet_dataset_free(easiernet_dataset* dataset);

EASIERNET_API size_t easiernet_dataset_rows(const easiernet_dataset* dataset);
EASIERNET_API size_t easiernet_dataset_cols(const easiernet_dataset* dataset);
EASIERNET_API int easiernet_dataset_has_target(const easiernet_dataset* dataset);
EASIERNET_API easiernet_task easiernet_dataset_task(const easiernet_dataset* dataset);
EASIERNET_API size_t easiernet_dataset_num_classes(const easiernet_dataset* dataset);
EASIERNET_API const char* easiernet_dataset_feature_name(const easiernet_dataset* dataset, size_t i);
EASIERNET_API const char* easiernet_dataset_target_name(const easiernet_dataset* dataset);
/* Targets in original units (class indices for classification). */
EASIERNET_API easiernet_status easiernet_dataset_targets(const easiernet_dataset* dataset,
                                                         double* out, size_t capacity);

/* ---- models ------------------------------------------------------------ */

/* Standardizes the data, then fits options->ensemble_size members. */
EASIERNET_API easiernet_status easiernet_model_fit(const easiernet_dataset* dataset,
                                                   const easiernet_fit_options* options,
                                                   easiernet_model** out);
EASIERNET_API easiernet_status easiernet_model_save(const easiernet_model* model, const char* path);
EASIERNET_API easiernet_status easiernet_model_load(const char* path, easiernet_model** out);
EASIERNET_API void easiernet_model_free(easiernet_model* model);

EASIERNET_API size_t easiernet_model_members(const easiernet_model* model);
EASIERNET_API size_t easiernet_model_input_dim(const easiernet_model* model);
EASIERNET_API size_t easiernet_model_output_dim(const easiernet_model* model);
/* Number of non-output layers, i.e. the length of a contribution vector. */
EASIERNET_API size_t easiernet_model_skip_layers(const easiernet_model* model);
EASIERNET_API easiernet_task easiernet_model_task(const easiernet_model* model);
EASIERNET_API const char* easiernet_model_feature_name(const easiernet_model* model, size_t i);
EASIERNET_API const char* easiernet_model_target_name(const easiernet_model* model);
EASIERNET_API const char* easiernet_model_class_label(const easiernet_model* model, size_t k);
EASIERNET_API void easiernet_model_penalty(const easiernet_model* model, double* lambda1,
                                           double* lambda2);

/* Training diagnostics; only available on models fitted in this process. */
EASIERNET_API easiernet_status easiernet_model_member_report(const easiernet_model* model,
                                                             size_t member,
                                                             easiernet_member_report* out);

/* Predictions for a dataset whose columns are matched to the model's
 * features by name. out receives rows * output_dim values, row-major:
 * original target units for regression, class probabilities otherwise. */
EASIERNET_API easiernet_status easiernet_model_predict(const easiernet_model* model,
                                                       const easiernet_dataset* dataset,
                                                       double* out, size_t capacity);
/* Same, for a raw row-major matrix already in model feature order. */
EASIERNET_API easiernet_status easiernet_model_predict_matrix(const easiernet_model* model,
                                                              const double* x, size_t rows,
                                                              size_t cols, double* out,
                                                              size_t capacity);
/* Mean of the members' outputs in the standardized space (no inverse
 * transform), for inputs already standardized. */
EASIERNET_API easiernet_status easiernet_model_member_predict_matrix(const easiernet_model* model,
                                                                     size_t member,
                                                                     const double* x, size_t rows,
                                                                     size_t cols, double* out,
                                                                     size_t capacity);

EASIERNET_API easiernet_status easiernet_model_selection_rates(const easiernet_model* model,
                                                               double* out, size_t capacity);
/* contributions (capacity >= skip layers) is filled when dataset is given. */
EASIERNET_API easiernet_status easiernet_model_member_structure(const easiernet_model* model,
                                                                size_t member,
                                                                const easiernet_dataset* dataset,
                                                                easiernet_structure* out,
                                                                double* contributions,
                                                                size_t capacity);

/* ---- cross-validation -------------------------------------------------- */

/* options->ensemble_size is the final refit size and options->seed the
 * master seed; the fit options' lambdas are ignored. */
EASIERNET_API easiernet_status easiernet_cross_validate(const easiernet_dataset* dataset,
                                                        const easiernet_fit_options* options,
                                                        const easiernet_cv_options* cv,
                                                        easiernet_cv_result** out);
EASIERNET_API size_t easiernet_cv_result_candidates(const easiernet_cv_result* result);
EASIERNET_API easiernet_status easiernet_cv_result_candidate(const easiernet_cv_result* result,
                                                             size_t index,
                                                             easiernet_cv_candidate* out);
EASIERNET_API size_t easiernet_cv_result_chosen(const easiernet_cv_result* result);
/* Copies the refitted model into a new handle owned by the caller. */
EASIERNET_API easiernet_status easiernet_cv_result_model(const easiernet_cv_result* result,
                                                         easiernet_model** out);
EASIERNET_API void easiernet_cv_result_free(easiernet_cv_result* result);

#ifdef __cplusplus
}
#endif

#endif /* EASIERNET_EASIERNET_H */
