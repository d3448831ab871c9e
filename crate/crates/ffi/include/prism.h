#ifndef PRISM_H
#define PRISM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PrismStatus {
  PRISM_STATUS_OK = 0,
  PRISM_STATUS_NULL_POINTER = 1,
  PRISM_STATUS_INVALID_UTF8 = 2,
  PRISM_STATUS_IO = 3,
  PRISM_STATUS_FORMAT = 4,
  PRISM_STATUS_DATA = 5,
  PRISM_STATUS_MANIFEST = 6,
  PRISM_STATUS_DEGENERATE = 7,
  PRISM_STATUS_CONTRACT = 8,
  PRISM_STATUS_BUFFER_TOO_SMALL = 9,
  PRISM_STATUS_PANIC = 10,
} PrismStatus;

typedef enum PrismSelector {
  PRISM_SELECTOR_PRISM = 0,
  PRISM_SELECTOR_RANDOM = 1,
  PRISM_SELECTOR_FPS = 2,
  PRISM_SELECTOR_COSINE = 3,
} PrismSelector;

typedef enum PrismMetric {
  PRISM_METRIC_COSINE = 0,
  PRISM_METRIC_EUCLIDEAN = 1,
} PrismMetric;

/**
 * Opaque dataset: a feature matrix plus its manifest.
 */
typedef struct PrismDataset PrismDataset;

/**
 * Summary of an anisotropy diagnosis. `drift_ratio` is `INFINITY` when all
 * rows are identical.
 */
typedef struct PrismAnisotropy {
  double mean_min;
  double mean_p25;
  double mean_p75;
  double mean_p99;
  double mean_max;
  double mean_abs;
  size_t k;
  double energy_topk;
  double effective_rank;
  double drift_ratio;
} PrismAnisotropy;

typedef struct PrismOscResult {
  double score;
  double performance_ratio;
  double time_ratio;
  bool viable;
} PrismOscResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on the calling thread, or NULL after
 * a success. Valid until the next library call on this thread.
 */
const char *prism_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *prism_version(void);

uint32_t prism_format_version(void);

/**
 * Number of samples kept at `tau` percent of `n`, or 0 if `tau` is outside
 * (0, 100].
 */
size_t prism_budget(size_t n, double tau);

/**
 * Reads a feature file and its manifest sidecar.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum PrismStatus prism_dataset_read(const char *path, struct PrismDataset **out);

/**
 * Builds a dataset from `n * dim` row-major floats. Samples get ids
 * `"0"`, `"1"`, ... and the source tag `source` (or `"default"` when NULL).
 *
 * # Safety
 * `values` must point to `n * dim` readable floats, `source` must be NULL
 * or NUL-terminated, and `out` must be writable.
 */
enum PrismStatus prism_dataset_from_raw(const float *values,
                                        size_t n,
                                        size_t dim,
                                        const char *source,
                                        struct PrismDataset **out);

/**
 * Writes the dataset as a feature file plus manifest sidecar.
 *
 * # Safety
 * `ds` must be a live handle and `path` NUL-terminated.
 */
enum PrismStatus prism_dataset_write(const struct PrismDataset *ds, const char *path);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `ds` must be NULL or a handle not yet freed.
 */
void prism_dataset_free(struct PrismDataset *ds);

/**
 * # Safety
 * `ds` must be NULL or a live handle. Returns 0 for NULL.
 */
size_t prism_dataset_n_samples(const struct PrismDataset *ds);

/**
 * # Safety
 * `ds` must be NULL or a live handle. Returns 0 for NULL.
 */
size_t prism_dataset_dim(const struct PrismDataset *ds);

/**
 * Redundancy score of every sample. `scores` needs room for `capacity >=
 * n_samples` values; `degenerate` may be NULL, otherwise it receives 1 for
 * constant rows and 0 elsewhere.
 *
 * # Safety
 * Buffers must be writable for `capacity` elements.
 */
enum PrismStatus prism_redundancy_scores(const struct PrismDataset *ds,
                                         double *scores,
                                         uint8_t *degenerate,
                                         size_t capacity);

/**
 * Selects `prism_budget(n, tau)` sample indices, ascending, into `indices`.
 * `seed` may be NULL for selectors that do not use one. `threshold` may be
 * NULL; it receives the selection threshold or NAN when the selector has
 * none.
 *
 * # Safety
 * `indices` must be writable for `capacity` elements; `count` writable;
 * `seed` and `threshold` NULL or valid.
 */
enum PrismStatus prism_select(const struct PrismDataset *ds,
                              double tau,
                              enum PrismSelector selector,
                              enum PrismMetric metric,
                              const uint64_t *seed,
                              size_t *indices,
                              size_t capacity,
                              size_t *count,
                              double *threshold);

/**
 * Anisotropy summary with the top `k` singular values written to
 * `singular_values` (which may be NULL).
 *
 * # Safety
 * `out` must be writable; `singular_values` NULL or writable for `k` values.
 */
enum PrismStatus prism_anisotropy(const struct PrismDataset *ds,
                                  size_t k,
                                  struct PrismAnisotropy *out,
                                  double *singular_values);

/**
 * Overall selection cost; times in hours.
 *
 * # Safety
 * `out` must be writable.
 */
enum PrismStatus prism_osc(double perf_full,
                           double perf_sub,
                           double t_select,
                           double t_tune_sub,
                           double t_tune_full,
                           struct PrismOscResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PRISM_H */
