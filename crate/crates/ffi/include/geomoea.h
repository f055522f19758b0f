#ifndef GEOMOEA_H
#define GEOMOEA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum GmStatus {
  GM_STATUS_OK = 0,
  GM_STATUS_NULL_POINTER = 1,
  GM_STATUS_INVALID_ARGUMENT = 2,
  GM_STATUS_MISSING_FILE = 3,
  GM_STATUS_IO = 4,
  GM_STATUS_PARSE = 5,
  GM_STATUS_SCHEMA = 6,
  GM_STATUS_INVALID_CONFIG = 7,
  GM_STATUS_INFEASIBLE = 8,
  GM_STATUS_NOT_FOUND = 9,
  GM_STATUS_INTERNAL = 10,
} GmStatus;

typedef struct GmDomain GmDomain;

typedef struct GmFront GmFront;

typedef struct GmMatrix GmMatrix;

typedef struct GmPartition GmPartition;

/**
 * Objective values of a matrix.
 */
typedef struct GmEvaluation {
  double qloss;
  double exp_err;
  double min_conditional_error;
} GmEvaluation;

/**
 * Verifier outcomes; each flag is 1 on pass, 0 on failure.
 */
typedef struct GmVerifyReport {
  uint8_t within_pls;
  double within_pls_max_ratio;
  uint8_t cross_pls;
  uint32_t cross_pls_violations;
  uint8_t geo_indistinguishability;
  uint8_t row_stochastic;
  double row_max_deviation;
  uint8_t error_floor;
  double min_conditional_error;
  uint8_t all;
} GmVerifyReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next `gm_*` call on the same thread.
 */
const char *gm_last_error(void);

/**
 * Library version, static storage.
 */
const char *gm_version(void);

/**
 * The 400-location synthetic benchmark generated from `seed`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum GmStatus gm_domain_benchmark(uint64_t seed, struct GmDomain **out);

/**
 * Loads a CSV dataset (`id,x,y` km, or `id,lon,lat` when `geo` is nonzero).
 * `blur_radius_m` and `seed` control the location blur and random priors.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum GmStatus gm_domain_load_csv(const char *path,
                                 uint8_t geo,
                                 double blur_radius_m,
                                 uint64_t seed,
                                 struct GmDomain **out);

/**
 * Reads a `domain.json` file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum GmStatus gm_domain_read_json(const char *path, struct GmDomain **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string.
 */
enum GmStatus gm_domain_write_json(const struct GmDomain *domain, const char *path);

/**
 * Number of locations, 0 for NULL.
 *
 * # Safety
 * `domain` must be NULL or a live handle.
 */
size_t gm_domain_len(const struct GmDomain *domain);

/**
 * Id of the location at position `index` (0-based) in the domain order.
 *
 * # Safety
 * `domain` must be a live handle and `out_id` a valid pointer.
 */
enum GmStatus gm_domain_id(const struct GmDomain *domain, size_t index, uint32_t *out_id);

/**
 * # Safety
 * `domain` must be NULL or a handle not yet freed.
 */
void gm_domain_free(struct GmDomain *domain);

/**
 * Binary cell split with `n0` locations per cell, then one randomized PLS
 * partition of every cell.
 *
 * # Safety
 * `domain` must be a live handle and `out` a valid pointer.
 */
enum GmStatus gm_partition_random(const struct GmDomain *domain,
                                  double epsilon0,
                                  double e_m,
                                  uint32_t n0,
                                  uint64_t seed,
                                  struct GmPartition **out);

/**
 * Number of PLSs, 0 for NULL.
 *
 * # Safety
 * `partition` must be NULL or a live handle.
 */
size_t gm_partition_len(const struct GmPartition *partition);

/**
 * Budget allocated to PLS `index`.
 *
 * # Safety
 * `partition` must be a live handle and `out` a valid pointer.
 */
enum GmStatus gm_partition_epsilon(const struct GmPartition *partition, size_t index, double *out);

/**
 * # Safety
 * `partition` and `domain` must be live handles; `path` NUL-terminated.
 */
enum GmStatus gm_partition_write_json(const struct GmPartition *partition,
                                      const struct GmDomain *domain,
                                      const char *path);

/**
 * # Safety
 * `partition` must be NULL or a handle not yet freed.
 */
void gm_partition_free(struct GmPartition *partition);

/**
 * Obfuscation matrix of a partition.
 *
 * # Safety
 * `partition` and `domain` must be live handles and `out` a valid pointer.
 */
enum GmStatus gm_matrix_build(const struct GmPartition *partition,
                              const struct GmDomain *domain,
                              struct GmMatrix **out);

/**
 * Reads a JSON or binary matrix file.
 *
 * # Safety
 * `path` must be NUL-terminated, `domain` live and `out` valid.
 */
enum GmStatus gm_matrix_read(const char *path,
                             const struct GmDomain *domain,
                             struct GmMatrix **out);

/**
 * # Safety
 * `matrix` and `domain` must be live handles; `path` NUL-terminated.
 */
enum GmStatus gm_matrix_write_json(const struct GmMatrix *matrix,
                                   const struct GmDomain *domain,
                                   const char *path);

/**
 * Probability of reporting `output_id` from `true_id`.
 *
 * # Safety
 * `matrix` and `domain` must be live handles and `out` a valid pointer.
 */
enum GmStatus gm_matrix_prob(const struct GmMatrix *matrix,
                             const struct GmDomain *domain,
                             uint32_t true_id,
                             uint32_t output_id,
                             double *out);

/**
 * Draws a reported location for `true_id`, deterministic in `seed`.
 *
 * # Safety
 * `matrix` and `domain` must be live handles and `out_id` a valid pointer.
 */
enum GmStatus gm_matrix_sample(const struct GmMatrix *matrix,
                               const struct GmDomain *domain,
                               uint32_t true_id,
                               uint64_t seed,
                               uint32_t *out_id);

/**
 * # Safety
 * `matrix` must be NULL or a handle not yet freed.
 */
void gm_matrix_free(struct GmMatrix *matrix);

/**
 * Quality loss, expected inference error and the smallest per-output error.
 *
 * # Safety
 * `domain` and `matrix` must be live handles and `out` a valid pointer.
 */
enum GmStatus gm_evaluate(const struct GmDomain *domain,
                          const struct GmMatrix *matrix,
                          struct GmEvaluation *out);

/**
 * Runs every verifier on a matrix built for `partition`. Returns `Ok`
 * even when a check fails; inspect the report.
 *
 * # Safety
 * All handles must be live and `out` a valid pointer.
 */
enum GmStatus gm_verify(const struct GmMatrix *matrix,
                        const struct GmPartition *partition,
                        const struct GmDomain *domain,
                        struct GmVerifyReport *out);

/**
 * Multi-objective search with default settings apart from the arguments.
 *
 * # Safety
 * `domain` must be a live handle and `out` a valid pointer.
 */
enum GmStatus gm_evolve(const struct GmDomain *domain,
                        double epsilon0,
                        double e_m,
                        uint32_t n0,
                        uint32_t population,
                        uint32_t max_generations,
                        uint64_t seed,
                        struct GmFront **out);

/**
 * Number of front solutions, 0 for NULL.
 *
 * # Safety
 * `front` must be NULL or a live handle.
 */
size_t gm_front_len(const struct GmFront *front);

/**
 * # Safety
 * `front` must be NULL or a live handle.
 */
double gm_front_hypervolume(const struct GmFront *front);

/**
 * Objectives of solution `index` (solutions are in ascending QLoss).
 *
 * # Safety
 * `front` must be a live handle and `out` a valid pointer.
 */
enum GmStatus gm_front_get(const struct GmFront *front, size_t index, struct GmEvaluation *out);

/**
 * Copies solution `index`'s partition into a new handle.
 *
 * # Safety
 * `front` must be a live handle and `out` a valid pointer.
 */
enum GmStatus gm_front_partition(const struct GmFront *front,
                                 size_t index,
                                 struct GmPartition **out);

/**
 * # Safety
 * `front` must be NULL or a handle not yet freed.
 */
void gm_front_free(struct GmFront *front);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GEOMOEA_H */
