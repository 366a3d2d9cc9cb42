#ifndef NCFBM_H
#define NCFBM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum NcfbmStatus {
  NCFBM_STATUS_OK = 0,
  NCFBM_STATUS_NULL_POINTER = 1,
  NCFBM_STATUS_INVALID_UTF8 = 2,
  NCFBM_STATUS_DOMAIN = 3,
  NCFBM_STATUS_RESOURCE = 4,
  NCFBM_STATUS_REGIME = 5,
  NCFBM_STATUS_PARSE = 6,
  NCFBM_STATUS_NO_CONVERGENCE = 7,
  NCFBM_STATUS_PANIC = 8,
} NcfbmStatus;

/**
 * Opaque trace engine bound to one Hurst index and horizon.
 */
typedef struct NcfbmEngine NcfbmEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates an engine; `*out` receives the handle.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum NcfbmStatus ncfbm_engine_new(double hurst, double horizon, struct NcfbmEngine **out);

/**
 * Releases an engine; null is ignored.
 *
 * # Safety
 * `engine` must come from [`ncfbm_engine_new`] and not be used afterwards.
 */
void ncfbm_engine_free(struct NcfbmEngine *engine);

/**
 * Trace of a word such as `"X(1) X(0.25,0.5)"`, times in horizon units.
 *
 * # Safety
 * `engine` must be a live handle, `word` a nul-terminated string, `out` writable.
 */
enum NcfbmStatus ncfbm_word_trace(const struct NcfbmEngine *engine, const char *word, double *out);

/**
 * `R_H(s,t)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum NcfbmStatus ncfbm_covariance(double hurst, double horizon, double s, double t, double *out);

/**
 * Number of non-crossing pairings of `2m` points.
 *
 * # Safety
 * `out` must be writable.
 */
enum NcfbmStatus ncfbm_catalan(uint32_t m, uint64_t *out);

/**
 * Canonical printed form of a polynomial; `*out` must be freed with
 * [`ncfbm_string_free`].
 *
 * # Safety
 * `poly` must be a nul-terminated string and `out` writable.
 */
enum NcfbmStatus ncfbm_polynomial_normalize(const char *poly, char **out);

/**
 * Copy of the last error message on this thread, or null if none. Free with
 * [`ncfbm_string_free`].
 */
char *ncfbm_last_error(void);

/**
 * Releases a string returned by this library; null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void ncfbm_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NCFBM_H */
