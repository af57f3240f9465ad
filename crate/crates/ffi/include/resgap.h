#ifndef RESGAP_H
#define RESGAP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes; the nonzero values match the command-line exit codes.
 */
typedef enum ResgapStatus {
  RESGAP_STATUS_OK = 0,
  RESGAP_STATUS_IO = 1,
  RESGAP_STATUS_INVALID_INPUT = 2,
  RESGAP_STATUS_INFEASIBLE = 3,
  RESGAP_STATUS_NO_CONVERGENCE = 4,
  RESGAP_STATUS_VERIFICATION_FAILED = 5,
  RESGAP_STATUS_NULL_POINTER = 6,
  RESGAP_STATUS_BUFFER_TOO_SMALL = 7,
  RESGAP_STATUS_PANIC = 8,
} ResgapStatus;

/**
 * Two-dimensional period-cell geometry.
 */
typedef struct ResgapGeometry ResgapGeometry;

/**
 * Limit model of a period cell.
 */
typedef struct ResgapModel ResgapModel;

/**
 * Limit gap endpoints.
 */
typedef struct ResgapReport ResgapReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library from the same thread.
 */
const char *resgap_last_error(void);

/**
 * Releases a string returned by the library.
 *
 * # Safety
 * `text` must come from this library and not be freed twice.
 */
void resgap_string_free(char *text);

/**
 * Parses a model from JSON (`n`, `resonators`, `b0_volume`).
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ResgapStatus resgap_model_from_json(const char *text, struct ResgapModel **out);

/**
 * # Safety
 * `model` must come from this library and not be freed twice.
 */
void resgap_model_free(struct ResgapModel *model);

/**
 * Secular function at `lambda`.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum ResgapStatus resgap_model_evaluate_f(const struct ResgapModel *model,
                                          double lambda,
                                          double *out);

/**
 * Limit gaps of a model.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum ResgapStatus resgap_compute_betas(const struct ResgapModel *model, struct ResgapReport **out);

/**
 * Number of gaps in a report; zero for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t resgap_report_len(const struct ResgapReport *report);

/**
 * Copies the gap endpoints into `alphas` and `betas`, each of room `cap`.
 *
 * # Safety
 * `report` must be a live handle; both buffers must hold `cap` values.
 */
enum ResgapStatus resgap_report_endpoints(const struct ResgapReport *report,
                                          double *alphas,
                                          double *betas,
                                          size_t cap);

/**
 * Report as JSON; release with [`resgap_string_free`].
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum ResgapStatus resgap_report_to_json(const struct ResgapReport *report, char **out);

/**
 * # Safety
 * `report` must come from this library and not be freed twice.
 */
void resgap_report_free(struct ResgapReport *report);

/**
 * Geometry whose limit gaps are `(alphas[j], betas[j])`.
 *
 * # Safety
 * `alphas` and `betas` must hold `m` values; `out` must be valid.
 */
enum ResgapStatus resgap_design(const double *alphas,
                                const double *betas,
                                size_t m,
                                double gamma,
                                struct ResgapGeometry **out);

/**
 * Recomputes the limit gaps of `geometry` and checks them against the
 * targets; the report is written even when the check fails.
 *
 * # Safety
 * `geometry` must be a live handle, the target arrays must hold `m`
 * values and `out` must be valid.
 */
enum ResgapStatus resgap_geometry_roundtrip(const struct ResgapGeometry *geometry,
                                            const double *alphas,
                                            const double *betas,
                                            size_t m,
                                            struct ResgapReport **out);

/**
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ResgapStatus resgap_geometry_from_json(const char *text, struct ResgapGeometry **out);

/**
 * Geometry as JSON; release with [`resgap_string_free`].
 *
 * # Safety
 * `geometry` must be a live handle and `out` a valid pointer.
 */
enum ResgapStatus resgap_geometry_to_json(const struct ResgapGeometry *geometry, char **out);

/**
 * # Safety
 * `geometry` must come from this library and not be freed twice.
 */
void resgap_geometry_free(struct ResgapGeometry *geometry);

/**
 * Band sweep of `geometry` at scale `epsilon`; writes the gaps that open
 * below the spectral cutoff. `k_max == 0` picks `m + 2` bands. On
 * [`ResgapStatus::BufferTooSmall`] `count` still holds the number found.
 *
 * # Safety
 * `geometry` must be a live handle, `lo` and `hi` must hold `cap` values
 * and `count` must be valid.
 */
enum ResgapStatus resgap_band_gaps(const struct ResgapGeometry *geometry,
                                   double epsilon,
                                   size_t grid_n,
                                   size_t theta_grid,
                                   size_t k_max,
                                   double *lo,
                                   double *hi,
                                   size_t cap,
                                   size_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RESGAP_H */
