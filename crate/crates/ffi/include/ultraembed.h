#ifndef ULTRAEMBED_H
#define ULTRAEMBED_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum UmStatus {
  UM_STATUS_OK = 0,
  UM_STATUS_NULL_POINTER = 1,
  UM_STATUS_INVALID_INPUT = 2,
  UM_STATUS_NOT_ULTRAMETRIC = 3,
  UM_STATUS_BOUND_VIOLATION = 4,
  UM_STATUS_UNDECIDED = 5,
  UM_STATUS_PANIC = 6,
} UmStatus;

/**
 * A validated finite metric space.
 */
typedef struct UmSpace UmSpace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a space from an `n × n` row-major distance matrix.
 *
 * # Safety
 * `data` must point to `n * n` readable doubles and `out` must be writable.
 */
enum UmStatus um_space_from_matrix(const double *data, uintptr_t n, struct UmSpace **out);

/**
 * Releases a space; null is ignored.
 *
 * # Safety
 * `space` must come from this library and not be used afterwards.
 */
void um_space_free(struct UmSpace *space);

/**
 * Number of points; 0 for null.
 *
 * # Safety
 * `space` must be null or a live handle.
 */
uintptr_t um_space_len(const struct UmSpace *space);

/**
 * Distance between points `i` and `j`.
 *
 * # Safety
 * `space` must be a live handle and `out` writable.
 */
enum UmStatus um_space_distance(const struct UmSpace *space, uintptr_t i, uintptr_t j, double *out);

/**
 * Strong triangle inequality with additive tolerance `tolerance`.
 *
 * # Safety
 * `space` must be a live handle and `out` writable.
 */
enum UmStatus um_is_ultrametric(const struct UmSpace *space, double tolerance, bool *out);

/**
 * The subdominant ultrametric, as a new handle.
 *
 * # Safety
 * `space` must be a live handle and `out` writable.
 */
enum UmStatus um_subdominant(const struct UmSpace *space, struct UmSpace **out);

/**
 * Smallest distortion of any embedding into an ultrametric.
 *
 * # Safety
 * `space` must be a live handle and `out` writable.
 */
enum UmStatus um_optimal_distortion(const struct UmSpace *space, double *out);

/**
 * Runs the full pipeline and returns its JSON report. `blocks = 0` embeds
 * single points; otherwise the space is cut into `blocks` clusters. An
 * undecided extraction returns `UM_STATUS_UNDECIDED` together with the
 * partial report.
 *
 * # Safety
 * `space` must be a live handle and `out` writable.
 */
enum UmStatus um_pipeline_json(const struct UmSpace *space,
                               double epsilon,
                               uintptr_t target,
                               uintptr_t blocks,
                               char **out);

/**
 * Releases a string returned by this library; null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void um_string_free(char *s);

/**
 * Message for the last failure on this thread, or null. Valid until the
 * next call into the library from the same thread.
 */
const char *um_last_error_message(void);

/**
 * Library version, a static string.
 */
const char *um_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ULTRAEMBED_H */
