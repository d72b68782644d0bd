/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef UNLEARN_H
#define UNLEARN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum UnlearnStatus {
  UNLEARN_STATUS_OK = 0,
  UNLEARN_STATUS_NULL_POINTER = 1,
  UNLEARN_STATUS_INVALID_ARGUMENT = 2,
  UNLEARN_STATUS_INVALID_UTF8 = 3,
  UNLEARN_STATUS_UNKNOWN_DATASET = 4,
  UNLEARN_STATUS_CORRUPT_DATA = 5,
  UNLEARN_STATUS_SHAPE_MISMATCH = 6,
  UNLEARN_STATUS_UNKNOWN_METHOD = 7,
  UNLEARN_STATUS_INCOMPATIBLE = 8,
  UNLEARN_STATUS_UNDEFINED_BASELINE = 9,
  UNLEARN_STATUS_UNKNOWN_FORMAT = 10,
  UNLEARN_STATUS_SCHEMA_VERSION = 11,
  UNLEARN_STATUS_CONFIG = 12,
  UNLEARN_STATUS_CHECKPOINT = 13,
  UNLEARN_STATUS_IO = 14,
  // A Rust panic was caught at the boundary.
  UNLEARN_STATUS_INTERNAL = 99,
} UnlearnStatus;

// Which half of a dataset to use.
typedef enum UnlearnSplit {
  UNLEARN_SPLIT_TRAIN = 0,
  UNLEARN_SPLIT_TEST = 1,
} UnlearnSplit;

typedef enum UnlearnReportFormat {
  UNLEARN_REPORT_FORMAT_MARKDOWN = 0,
  UNLEARN_REPORT_FORMAT_CSV = 1,
} UnlearnReportFormat;

// Opaque loaded dataset.
typedef struct UnlearnDataset UnlearnDataset;

// Opaque classifier.
typedef struct UnlearnModel UnlearnModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or NULL after a success. The
// pointer stays valid until the next call into this library on the thread.
const char *unlearn_last_error_message(void);

// Static version string.
const char *unlearn_version(void);

// # Safety
// `s` must be NULL or a string returned by this library, freed once.
void unlearn_string_free(char *s);

// Loads a registered dataset. `options_json` may be NULL for defaults.
//
// # Safety
// String arguments must be NUL-terminated; `out` must be writable.
enum UnlearnStatus unlearn_dataset_load(const char *name,
                                        const char *options_json,
                                        struct UnlearnDataset **out);

// # Safety
// `ds` must be NULL or a handle from [`unlearn_dataset_load`], freed once.
void unlearn_dataset_free(struct UnlearnDataset *ds);

// # Safety
// `ds` must be a live dataset handle; out-pointers must be writable.
enum UnlearnStatus unlearn_dataset_shape(const struct UnlearnDataset *ds,
                                         enum UnlearnSplit split,
                                         size_t *out_len,
                                         size_t *out_feature_dim,
                                         size_t *out_num_classes);

// # Safety
// `hidden` must point to `hidden_len` widths (or be NULL when 0); `out` must
// be writable.
enum UnlearnStatus unlearn_model_random_init(size_t input_dim,
                                             const size_t *hidden,
                                             size_t hidden_len,
                                             size_t num_classes,
                                             uint64_t seed,
                                             struct UnlearnModel **out);

// Trains a copy of `model` on the dataset's training half. `config_json`
// holds a training config (`epochs`, `learning_rate`, `batch_size`, `seed`,
// optional `optimizer`), or NULL for defaults.
//
// # Safety
// Handles must be live; `out` must be writable.
enum UnlearnStatus unlearn_model_train(const struct UnlearnModel *model,
                                       const struct UnlearnDataset *ds,
                                       const char *config_json,
                                       struct UnlearnModel **out);

// # Safety
// `model` must be NULL or a model handle, freed once.
void unlearn_model_free(struct UnlearnModel *model);

// # Safety
// `model` must be live; `out` must be writable.
enum UnlearnStatus unlearn_model_param_count(const struct UnlearnModel *model, size_t *out);

// Class probabilities for one input. `probs` must have room for
// `probs_len >= num_classes` values.
//
// # Safety
// `features` must point to `features_len` doubles and `probs` to `probs_len`.
enum UnlearnStatus unlearn_model_predict(const struct UnlearnModel *model,
                                         const double *features,
                                         size_t features_len,
                                         double *probs,
                                         size_t probs_len);

// Top-1 accuracy in [0, 1] on one half of a dataset.
//
// # Safety
// Handles must be live; `out` must be writable.
enum UnlearnStatus unlearn_model_accuracy(const struct UnlearnModel *model,
                                          const struct UnlearnDataset *ds,
                                          enum UnlearnSplit split,
                                          double *out);

// # Safety
// `model` must be live; `path` NUL-terminated.
enum UnlearnStatus unlearn_model_save(const struct UnlearnModel *model, const char *path);

// # Safety
// `path` NUL-terminated; `out` writable.
enum UnlearnStatus unlearn_model_load(const char *path, struct UnlearnModel **out);

// Base-2 Jensen-Shannon divergence of two distributions of length `len`.
//
// # Safety
// `p` and `q` must point to `len` doubles; `out` writable.
enum UnlearnStatus unlearn_js_divergence(const double *p, const double *q, size_t len, double *out);

// Base-2 KL(p ‖ q).
//
// # Safety
// `p` and `q` must point to `len` doubles; `out` writable.
enum UnlearnStatus unlearn_kl_divergence(const double *p, const double *q, size_t len, double *out);

// `a_u / a_b × 100`.
//
// # Safety
// `out` must be writable.
enum UnlearnStatus unlearn_relative_accuracy(double a_u, double a_b, double *out);

// Runs one experiment from a TOML config and returns its record as JSON.
// `cache_dir` may be NULL for no baseline cache.
//
// # Safety
// Strings NUL-terminated; `out_json` writable. Free the result with
// [`unlearn_string_free`].
enum UnlearnStatus unlearn_run_experiment(const char *config_toml,
                                          const char *cache_dir,
                                          char **out_json);

// Renders a results table from a JSON array of records (as returned by
// [`unlearn_run_experiment`]), one row per record.
//
// # Safety
// `records_json` NUL-terminated; `out` writable. Free the result with
// [`unlearn_string_free`].
enum UnlearnStatus unlearn_emit_report(const char *records_json,
                                       enum UnlearnReportFormat format,
                                       char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UNLEARN_H */
