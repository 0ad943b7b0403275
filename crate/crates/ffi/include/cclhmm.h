#ifndef CCLHMM_H
#define CCLHMM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Cell value marking a missing observation.
#define CCL_MISSING 255

typedef enum CclFamily {
  CCL_FAMILY_CHAINS = 0,
  CCL_FAMILY_CCLF = 1,
  CCL_FAMILY_HMM_CI = 2,
  CCL_FAMILY_HMM_CL = 3,
  CCL_FAMILY_HMM_CCL = 4,
} CclFamily;

typedef enum CclStatus {
  CCL_STATUS_OK = 0,
  CCL_STATUS_NULL_POINTER = 1,
  CCL_STATUS_USAGE = 2,
  CCL_STATUS_DATA = 3,
  CCL_STATUS_NUMERICAL = 4,
  CCL_STATUS_PANIC = 5,
} CclStatus;

// A growable set of sequences with fixed `num_vars` and `cardinality`.
typedef struct CclDataset CclDataset;

typedef struct CclModel CclModel;

// Training options. `num_states` is ignored for non-HMM families.
typedef struct CclFitOptions {
  enum CclFamily family;
  size_t num_states;
  double smoothing;
  size_t max_iterations;
  double tolerance;
  size_t restarts;
  uint64_t seed;
} CclFitOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer
// stays valid until the next call into this library on the same thread.
const char *ccl_last_error_message(void);

// Creates an empty dataset.
//
// # Safety
// `out` must be a valid pointer.
enum CclStatus ccl_dataset_new(size_t num_vars, size_t cardinality, struct CclDataset **out);

// Reads a dataset in the text format.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum CclStatus ccl_dataset_load(const char *path, struct CclDataset **out);

// Writes a dataset in the text format.
//
// # Safety
// `ds` must be a live handle and `path` a NUL-terminated string.
enum CclStatus ccl_dataset_save(const struct CclDataset *ds, const char *path);

// Appends one sequence of `length` slices; `cells` holds `length * num_vars`
// values in time-major order, with [`CCL_MISSING`] for missing cells.
//
// # Safety
// `ds` must be a live handle and `cells` must point to `length * num_vars` bytes.
enum CclStatus ccl_dataset_push_sequence(struct CclDataset *ds,
                                         const uint8_t *cells,
                                         size_t length);

// # Safety
// `ds` must be a live handle and `out` a valid pointer.
enum CclStatus ccl_dataset_num_sequences(const struct CclDataset *ds, size_t *out);

// Number of slices in sequence `index`.
//
// # Safety
// `ds` must be a live handle and `out` a valid pointer.
enum CclStatus ccl_dataset_sequence_length(const struct CclDataset *ds, size_t index, size_t *out);

// Copies sequence `index` into `cells`, which must hold `capacity` bytes.
//
// # Safety
// `ds` must be a live handle and `cells` must point to `capacity` writable bytes.
enum CclStatus ccl_dataset_copy_sequence(const struct CclDataset *ds,
                                         size_t index,
                                         uint8_t *cells,
                                         size_t capacity);

// # Safety
// `ds` must be null or a handle not yet freed.
void ccl_dataset_free(struct CclDataset *ds);

// Library defaults for `family`.
struct CclFitOptions ccl_fit_options_default(enum CclFamily family);

// Fits a model to `ds`.
//
// # Safety
// `ds` must be a live handle, `options` and `out` valid pointers.
enum CclStatus ccl_model_fit(const struct CclDataset *ds,
                             const struct CclFitOptions *options,
                             struct CclModel **out);

// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum CclStatus ccl_model_load(const char *path, struct CclModel **out);

// # Safety
// `model` must be a live handle and `path` a NUL-terminated string.
enum CclStatus ccl_model_save(const struct CclModel *model, const char *path);

// Number of hidden states, or 0 for the non-HMM families.
//
// # Safety
// `model` must be a live handle and `out` a valid pointer.
enum CclStatus ccl_model_num_states(const struct CclModel *model, size_t *out);

// Log-likelihood of `ds` per observed cell, in nats.
//
// # Safety
// `model` and `ds` must be live handles and `out` a valid pointer.
enum CclStatus ccl_model_scaled_log_likelihood(const struct CclModel *model,
                                               const struct CclDataset *ds,
                                               double *out);

// Draws `num_sequences` sequences of `length` slices.
//
// # Safety
// `model` must be a live handle and `out` a valid pointer.
enum CclStatus ccl_model_simulate(const struct CclModel *model,
                                  size_t num_sequences,
                                  size_t length,
                                  uint64_t seed,
                                  struct CclDataset **out);

// Returns a copy of `ds` with every missing cell set to its most probable value.
//
// # Safety
// `model` and `ds` must be live handles and `out` a valid pointer.
enum CclStatus ccl_model_impute(const struct CclModel *model,
                                const struct CclDataset *ds,
                                struct CclDataset **out);

// # Safety
// `model` must be null or a handle not yet freed.
void ccl_model_free(struct CclModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CCLHMM_H */
