#ifndef LIPMM_H
#define LIPMM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum LipmmStatus {
  LIPMM_STATUS_OK = 0,
  /**
   * A certificate or validation check did not pass; outputs are still written.
   */
  LIPMM_STATUS_VALIDATION_FAILED = 1,
  LIPMM_STATUS_BAD_INPUT = 2,
  LIPMM_STATUS_INVARIANT = 3,
  LIPMM_STATUS_NULL_POINTER = 4,
  LIPMM_STATUS_PANIC = 5,
} LipmmStatus;

/**
 * Fragment representation of a measure on a space.
 */
typedef struct LipmmRep LipmmRep;

/**
 * Finite metric measure space.
 */
typedef struct LipmmSpace LipmmSpace;

/**
 * Outcome of the independent-function construction.
 */
typedef struct LipmmIndependence {
  size_t sample_points;
  size_t kept_points;
  double max_lipschitz;
  double lipschitz_bound;
  double min_variation;
  double variation_bound;
  double min_window_ratio;
  bool certified;
} LipmmIndependence;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null.
 */
const char *lipmm_last_error(void);

/**
 * Library version as a static string.
 */
const char *lipmm_version(void);

/**
 * Space from the JSON point-cloud format `{points:[{id,coords,weight}], metric, matrix?}`.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum LipmmStatus lipmm_space_from_json(const char *json, double tol, struct LipmmSpace **out);

/**
 * Uniform `side^dim` grid on the unit cube (`max_norm` selects the max metric).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LipmmStatus lipmm_space_grid(size_t dim, size_t side, bool max_norm, struct LipmmSpace **out);

/**
 * `n` equispaced points on `[0, 1]`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LipmmStatus lipmm_space_segment(size_t n, struct LipmmSpace **out);

/**
 * Endpoints of the level-`level` middle-thirds intervals.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LipmmStatus lipmm_space_cantor(uint32_t level, struct LipmmSpace **out);

/**
 * # Safety
 * `space` must come from a `lipmm_space_*` constructor and not be used afterwards.
 */
void lipmm_space_free(struct LipmmSpace *space);

/**
 * Number of points (0 for a null handle).
 *
 * # Safety
 * `space` must be null or a live handle.
 */
size_t lipmm_space_len(const struct LipmmSpace *space);

/**
 * # Safety
 * `space` must be a live handle and `out` a valid pointer.
 */
enum LipmmStatus lipmm_space_dist(const struct LipmmSpace *space, size_t i, size_t j, double *out);

/**
 * Lines of a `side x side` grid along coordinate `axis`.
 *
 * # Safety
 * `space` must be a live handle and `out` a valid pointer.
 */
enum LipmmStatus lipmm_rep_grid_lines(const struct LipmmSpace *space,
                                      size_t side,
                                      size_t axis,
                                      struct LipmmRep **out);

/**
 * Representation from JSON `{fragments:[{domain, trace:[ids]}], probs, densities}`.
 *
 * # Safety
 * `space` must be a live handle, `json` a NUL-terminated string, `out` valid.
 */
enum LipmmStatus lipmm_rep_from_json(const struct LipmmSpace *space,
                                     const char *json,
                                     struct LipmmRep **out);

/**
 * # Safety
 * `rep` must come from a `lipmm_rep_*` constructor and not be used afterwards.
 */
void lipmm_rep_free(struct LipmmRep *rep);

/**
 * Largest pointwise gap between the measure and the one the representation
 * induces; `LIPMM_STATUS_VALIDATION_FAILED` when it exceeds `tol`.
 *
 * # Safety
 * Handles must be live and `max_residual` valid.
 */
enum LipmmStatus lipmm_rep_validate(const struct LipmmSpace *space,
                                    const struct LipmmRep *rep,
                                    double tol,
                                    double *max_residual);

/**
 * Derivation of a scalar function (`n` values, one per point) and the effective
 * speed; both outputs hold `n` values, NaN where the measure vanishes.
 *
 * # Safety
 * Handles must be live; `f`, `df` and `sigma` must hold `n` doubles.
 */
enum LipmmStatus lipmm_derivation(const struct LipmmSpace *space,
                                  const struct LipmmRep *rep,
                                  const double *f,
                                  size_t n,
                                  double *df,
                                  double *sigma);

/**
 * `max |f(x) - f(y)| / d(x, y)` over `0 < d(x, y) <= r`.
 *
 * # Safety
 * `space` must be live, `f` must hold `n` doubles, `out` valid.
 */
enum LipmmStatus lipmm_biglip_at(const struct LipmmSpace *space,
                                 const double *f,
                                 size_t n,
                                 size_t x,
                                 double r,
                                 double *out);

/**
 * Ratio of the upper and lower pointwise Lipschitz constants at `window`
 * (`window <= 0` uses the common finest window); `ratios` holds `n` values.
 *
 * # Safety
 * `space` must be live; `f` and `ratios` must hold `n` doubles.
 */
enum LipmmStatus lipmm_liplip_ratios(const struct LipmmSpace *space,
                                     const double *f,
                                     size_t n,
                                     double window,
                                     double *ratios);

/**
 * Builds `m` independent functions on the Cantor probe sample in exact
 * arithmetic. Parameters are exact rationals as strings (`"1/2"`, `"0.05"`).
 *
 * # Safety
 * String arguments must be NUL-terminated and `out` valid.
 */
enum LipmmStatus lipmm_zahorski_build(const char *delta0,
                                      const char *lip,
                                      const char *alpha,
                                      size_t m,
                                      size_t depth,
                                      double tol,
                                      struct LipmmIndependence *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LIPMM_H */
