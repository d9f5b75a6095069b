#ifndef CORE_KGT_H
#define CORE_KGT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CoreKgtBaseline {
  CORE_KGT_BASELINE_SDTYPE = 0,
  CORE_KGT_BASELINE_SDTYPE_COND = 1,
} CoreKgtBaseline;

typedef enum CoreKgtModelKind {
  CORE_KGT_MODEL_KIND_ROTATE = 0,
  CORE_KGT_MODEL_KIND_COMPLEX = 1,
} CoreKgtModelKind;

typedef enum CoreKgtSplit {
  CORE_KGT_SPLIT_TRAIN = 0,
  CORE_KGT_SPLIT_VALID = 1,
  CORE_KGT_SPLIT_TEST = 2,
} CoreKgtSplit;

typedef enum CoreKgtStatus {
  CORE_KGT_STATUS_OK = 0,
  CORE_KGT_STATUS_NULL_POINTER = 1,
  CORE_KGT_STATUS_INVALID_ARGUMENT = 2,
  CORE_KGT_STATUS_IO = 3,
  CORE_KGT_STATUS_PARSE = 4,
  CORE_KGT_STATUS_NOT_FOUND = 5,
  CORE_KGT_STATUS_MISMATCH = 6,
  CORE_KGT_STATUS_CHECKPOINT = 7,
  CORE_KGT_STATUS_BUFFER_TOO_SMALL = 8,
  CORE_KGT_STATUS_PANIC = 9,
  CORE_KGT_STATUS_OTHER = 10,
} CoreKgtStatus;

/**
 * Opaque loaded dataset.
 */
typedef struct CoreKgtDataset CoreKgtDataset;

/**
 * Opaque loaded checkpoint.
 */
typedef struct CoreKgtModel CoreKgtModel;

typedef struct CoreKgtModelShape {
  enum CoreKgtModelKind kind;
  uint64_t k;
  uint64_t l;
  uint64_t n_entities;
  uint64_t n_relations;
  uint64_t n_types;
  uint64_t step;
} CoreKgtModelShape;

typedef struct CoreKgtReport {
  double mrr;
  double hits1;
  double hits3;
  double hits10;
  uint64_t n_queries;
} CoreKgtReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into this library on the same thread.
 */
const char *core_kgt_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *core_kgt_version(void);

/**
 * Loads the split files under `dir`.
 *
 * # Safety
 * `dir` must be a NUL-terminated string and `out` a writable pointer.
 */
enum CoreKgtStatus core_kgt_dataset_load(const char *dir, struct CoreKgtDataset **out);

/**
 * # Safety
 * `ds` must come from `core_kgt_dataset_load` and not be used afterwards.
 */
void core_kgt_dataset_free(struct CoreKgtDataset *ds);

/**
 * # Safety
 * `ds` must be a live dataset handle; output pointers may be null.
 */
enum CoreKgtStatus core_kgt_dataset_counts(const struct CoreKgtDataset *ds,
                                           uint64_t *n_entities,
                                           uint64_t *n_relations,
                                           uint64_t *n_types);

/**
 * Id of the entity called `name`.
 *
 * # Safety
 * `ds` must be a live dataset handle, `name` NUL-terminated, `out` writable.
 */
enum CoreKgtStatus core_kgt_entity_id(const struct CoreKgtDataset *ds,
                                      const char *name,
                                      uint32_t *out);

/**
 * Copies the name of type `id` into `buf` (NUL-terminated). `needed`, if
 * non-null, receives the required size including the terminator.
 *
 * # Safety
 * `ds` must be a live dataset handle and `buf` valid for `len` bytes.
 */
enum CoreKgtStatus core_kgt_type_name(const struct CoreKgtDataset *ds,
                                      uint32_t id,
                                      char *buf,
                                      size_t len,
                                      size_t *needed);

/**
 * Loads a checkpoint and its JSON sidecar.
 *
 * # Safety
 * `path` must be NUL-terminated and `out` writable.
 */
enum CoreKgtStatus core_kgt_model_load(const char *path, struct CoreKgtModel **out);

/**
 * # Safety
 * `m` must come from `core_kgt_model_load` and not be used afterwards.
 */
void core_kgt_model_free(struct CoreKgtModel *m);

/**
 * # Safety
 * `m` must be a live model handle and `out` writable.
 */
enum CoreKgtStatus core_kgt_model_shape(const struct CoreKgtModel *m,
                                        struct CoreKgtModelShape *out);

/**
 * Regression distance between an entity and a type; lower is a better fit.
 *
 * # Safety
 * `m` must be a live model handle and `out` writable.
 */
enum CoreKgtStatus core_kgt_model_score(const struct CoreKgtModel *m,
                                        uint32_t entity,
                                        uint32_t ty,
                                        double *out);

/**
 * Writes up to `n` best types for `entity` in ascending score order.
 * `written` receives the number of entries filled.
 *
 * # Safety
 * `types` and `scores` must be valid for `n` elements; `scores` may be null.
 */
enum CoreKgtStatus core_kgt_model_predict_top(const struct CoreKgtModel *m,
                                              uint32_t entity,
                                              size_t n,
                                              uint32_t *types,
                                              double *scores,
                                              size_t *written);

/**
 * Filtered ranking of `split`. Fails with `CORE_KGT_STATUS_MISMATCH` if
 * the checkpoint was trained on a different vocabulary.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum CoreKgtStatus core_kgt_evaluate(const struct CoreKgtModel *m,
                                     const struct CoreKgtDataset *ds,
                                     enum CoreKgtSplit split,
                                     struct CoreKgtReport *out);

/**
 * Fits the counting baseline on train and ranks `split`.
 *
 * # Safety
 * `ds` must be live and `out` writable.
 */
enum CoreKgtStatus core_kgt_baseline_evaluate(const struct CoreKgtDataset *ds,
                                              enum CoreKgtBaseline mode,
                                              enum CoreKgtSplit split,
                                              struct CoreKgtReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CORE_KGT_H */
