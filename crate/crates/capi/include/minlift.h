#ifndef MINLIFT_H
#define MINLIFT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  ML_STATUS_OK = 0,
  ML_STATUS_NULL_POINTER = 1,
  ML_STATUS_INVALID_INPUT = 2,
  ML_STATUS_PARSE = 3,
  ML_STATUS_SINGULAR = 4,
  ML_STATUS_OUT_OF_DOMAIN = 5,
  ML_STATUS_NO_CONVERGENCE = 6,
  ML_STATUS_PANIC = 7,
} MlStatus;

/**
 * Harmonic map with its lift.
 */
typedef struct MlMap MlMap;

/**
 * Conformal metric on a disk.
 */
typedef struct MlMetric MlMetric;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *ml_last_error_message(void);

/**
 * Map from expressions for `h′` and `q` in `z`.
 *
 * # Safety
 * `h_prime` and `q` must be null or NUL-terminated strings; `out` must be
 * null or writable.
 */
MlStatus ml_map_new(const char *h_prime, const char *q, MlMap **out_map);

/**
 * Map from the built-in catalog (`planar`, `catenoid`, `strip`, ...).
 *
 * # Safety
 * As for [`ml_map_new`].
 */
MlStatus ml_map_from_catalog(const char *name, MlMap **out_map);

/**
 * # Safety
 * `map` must be null or a handle from this library not yet freed.
 */
void ml_map_free(MlMap *map);

/**
 * Lifted point `(x, y, z)` written to `out_xyz[0..3]`.
 *
 * # Safety
 * `map` must be a live handle and `out_xyz` must hold three doubles.
 */
MlStatus ml_map_lift(const MlMap *map, double re, double im, double *out_xyz);

/**
 * Conformal factor `e^σ`.
 *
 * # Safety
 * `map` must be a live handle; `out_value` must be writable.
 */
MlStatus ml_map_conformal_factor(const MlMap *map, double re, double im, double *out_value);

/**
 * Gauss curvature of the lift.
 *
 * # Safety
 * As for [`ml_map_conformal_factor`].
 */
MlStatus ml_map_gauss_curvature(const MlMap *map, double re, double im, double *out_value);

/**
 * Harmonic Schwarzian `2(σ_zz − σ_z²)`.
 *
 * # Safety
 * `map` must be a live handle; both outputs must be writable.
 */
MlStatus ml_map_schwarzian(const MlMap *map, double re, double im, double *out_re, double *out_im);

/**
 * `ρ = −t log(1 − |z|²)` on the unit disk.
 *
 * # Safety
 * `out_metric` must be writable.
 */
MlStatus ml_metric_power(double t, MlMetric **out_metric);

/**
 * Metric induced by the lift, on the disk of the given radius.
 *
 * # Safety
 * `map` must be a live handle; `out_metric` must be writable.
 */
MlStatus ml_metric_pullback(const MlMap *map, double domain_radius, MlMetric **out_metric);

/**
 * Sets the diameter used by the criteria.
 *
 * # Safety
 * `metric` must be a live handle.
 */
MlStatus ml_metric_set_diameter(MlMetric *metric, double delta);

/**
 * # Safety
 * `metric` must be null or a handle from this library not yet freed.
 */
void ml_metric_free(MlMetric *metric);

/**
 * Geodesic distance between two points.
 *
 * # Safety
 * `metric` must be a live handle; `out_value` must be writable.
 */
MlStatus ml_metric_distance(const MlMetric *metric,
                            double re1,
                            double im1,
                            double re2,
                            double im2,
                            double *out_value);

/**
 * Diameter of the unit disk for `ρ = −t log(1 − |z|²)`; infinite for `t ≥ 1`.
 *
 * # Safety
 * `out_value` must be writable.
 */
MlStatus ml_diameter_power(double t, double *out_value);

/**
 * Both sides of a criterion at one point. `variant` uses the names of the
 * configuration file (`main`, `nehari`, `power:0.5`, `intrinsic:6.28`, ...);
 * `metric` may be null for variants that do not need one.
 *
 * # Safety
 * `variant` must be a NUL-terminated string, `map` a live handle, `metric`
 * null or a live handle, and both outputs writable.
 */
MlStatus ml_criterion_sides(const char *variant,
                            const MlMap *map,
                            const MlMetric *metric,
                            double re,
                            double im,
                            double *out_lhs,
                            double *out_rhs);

/**
 * Self-intersection scan of the lift over a polar grid of the unit disk.
 * Writes the refined gap and whether it counts as a collision.
 *
 * # Safety
 * `map` must be a live handle; both outputs must be writable.
 */
MlStatus ml_collision_scan(const MlMap *map,
                           uint32_t nr,
                           uint32_t ntheta,
                           double *out_gap,
                           bool *out_collision);

/**
 * Library version as a static string.
 */
const char *ml_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MINLIFT_H */
