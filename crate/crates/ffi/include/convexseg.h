#ifndef CONVEXSEG_H
#define CONVEXSEG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CsInitKind {
  /**
   * `init = {cx, cy, r, unused}`
   */
  CS_INIT_KIND_CIRCLE = 0,
  /**
   * `init = {x0, y0, x1, y1}`
   */
  CS_INIT_KIND_RECTANGLE = 1,
} CsInitKind;

typedef enum CsModel {
  CS_MODEL_CHAN_VESE = 0,
  CS_MODEL_EDGE_ONLY = 1,
} CsModel;

typedef enum CsStatus {
  CS_STATUS_OK = 0,
  CS_STATUS_INVALID_INPUT = 1,
  CS_STATUS_INVALID_PARAMETER = 2,
  CS_STATUS_REGION_COLLAPSE = 3,
  CS_STATUS_CONVEXITY_VIOLATION = 4,
  CS_STATUS_IO = 5,
  CS_STATUS_PARSE = 6,
  CS_STATUS_NULL_POINTER = 7,
  CS_STATUS_PANIC = 8,
} CsStatus;

/**
 * Opaque 2-D scalar field, row-major.
 */
typedef struct CsField CsField;

/**
 * Opaque segmentation result.
 */
typedef struct CsSegmentation CsSegmentation;

typedef struct CsSegmentConfig {
  enum CsModel model;
  bool convex_prior;
  double mu;
  double lambda1;
  double lambda2;
  double heaviside_eps;
  double edge_scale;
  double dt;
  size_t outer_max;
  double stop_tol;
  size_t stop_patience;
  double prior_eps;
  size_t prior_n_max;
  size_t m_max;
  double active_tol;
  enum CsInitKind init_kind;
  double init[4];
} CsSegmentConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *cs_version(void);

/**
 * Message of the last failure on this thread, or NULL if none. Valid until
 * the next failing call on the same thread.
 */
const char *cs_last_error_message(void);

/**
 * Copy `width * height` row-major values into a new field.
 *
 * # Safety
 * `values` must point to `width * height` readable doubles; `out` must be
 * writable.
 */
enum CsStatus cs_field_new(size_t width, size_t height, const double *values, struct CsField **out);

/**
 * # Safety
 * `field` must be NULL or a handle from this library not yet freed.
 */
void cs_field_free(struct CsField *field);

/**
 * Width of the field, 0 for NULL.
 *
 * # Safety
 * `field` must be NULL or a live handle.
 */
size_t cs_field_width(const struct CsField *field);

/**
 * Height of the field, 0 for NULL.
 *
 * # Safety
 * `field` must be NULL or a live handle.
 */
size_t cs_field_height(const struct CsField *field);

/**
 * Copy the row-major values into `out`, which holds `len` doubles; `len`
 * must equal `width * height`.
 *
 * # Safety
 * `field` must be a live handle and `out` must have room for `len` doubles.
 */
enum CsStatus cs_field_copy_values(const struct CsField *field, double *out, size_t len);

/**
 * Five-point Laplacian with replicated borders.
 *
 * # Safety
 * `field` must be a live handle; `out` must be writable.
 */
enum CsStatus cs_laplacian(const struct CsField *field, struct CsField **out);

/**
 * Signed distance function with the same zero level set.
 *
 * # Safety
 * `field` must be a live handle; `out` must be writable.
 */
enum CsStatus cs_reinitialize(const struct CsField *field, struct CsField **out);

/**
 * Project onto fields with a non-negative interior Laplacian.
 * `iterations` may be NULL.
 *
 * # Safety
 * `field` must be a live handle; `out` must be writable; `iterations` must
 * be NULL or writable.
 */
enum CsStatus cs_project_convex(const struct CsField *field,
                                size_t m_max,
                                double active_tol,
                                struct CsField **out,
                                size_t *iterations);

/**
 * Alternate reinitialization and projection until the field is a convex
 * signed distance function. `outer_iterations` may be NULL.
 *
 * # Safety
 * `field` must be a live handle; `out` must be writable;
 * `outer_iterations` must be NULL or writable.
 */
enum CsStatus cs_enforce_convex_prior(const struct CsField *field,
                                      double eps,
                                      size_t n_max,
                                      size_t m_max,
                                      struct CsField **out,
                                      size_t *outer_iterations);

/**
 * Whether `{phi < 0}` is convex up to `slack` pixels.
 *
 * # Safety
 * `phi` must be a live handle; `out` must be writable.
 */
enum CsStatus cs_is_convex_region(const struct CsField *phi, double slack, bool *out);

/**
 * Library defaults for `model`, with a zero-radius circle as the initial
 * curve; set `init_kind` and `init` before use.
 */
struct CsSegmentConfig cs_segment_config_default(enum CsModel model);

/**
 * Segment `image` (values in [0, 1]). When `initial_phi` is non-NULL it is
 * used as the starting level set and the config's initial curve is ignored.
 *
 * # Safety
 * `image` must be a live handle, `config` readable, `initial_phi` NULL or a
 * live handle, and `out` writable.
 */
enum CsStatus cs_segment(const struct CsField *image,
                         const struct CsSegmentConfig *config,
                         const struct CsField *initial_phi,
                         struct CsSegmentation **out);

/**
 * # Safety
 * `seg` must be NULL or a handle from [`cs_segment`] not yet freed.
 */
void cs_segmentation_free(struct CsSegmentation *seg);

/**
 * Copy of the final level-set function.
 *
 * # Safety
 * `seg` must be a live handle; `out` must be writable.
 */
enum CsStatus cs_segmentation_phi(const struct CsSegmentation *seg, struct CsField **out);

/**
 * Write the region `{phi < 0}` as 0/1 bytes, row-major; `len` must equal
 * `width * height`.
 *
 * # Safety
 * `seg` must be a live handle; `out` must have room for `len` bytes.
 */
enum CsStatus cs_segmentation_region(const struct CsSegmentation *seg, uint8_t *out, size_t len);

/**
 * Outer iterations performed, 0 for NULL.
 *
 * # Safety
 * `seg` must be NULL or a live handle.
 */
size_t cs_segmentation_outer_iterations(const struct CsSegmentation *seg);

/**
 * Whether the stopping rule fired before the iteration cap.
 *
 * # Safety
 * `seg` must be NULL or a live handle.
 */
bool cs_segmentation_converged(const struct CsSegmentation *seg);

/**
 * Background (`c1`) and object (`c2`) means. Fails with
 * `CS_STATUS_INVALID_INPUT` for the edge model, which has none.
 *
 * # Safety
 * `seg` must be a live handle; `c1` and `c2` must be writable.
 */
enum CsStatus cs_segmentation_means(const struct CsSegmentation *seg, double *c1, double *c2);

/**
 * Length of the energy trace (one value per outer iteration).
 *
 * # Safety
 * `seg` must be NULL or a live handle.
 */
size_t cs_segmentation_trace_len(const struct CsSegmentation *seg);

/**
 * Copy the energy trace; `len` must equal [`cs_segmentation_trace_len`].
 *
 * # Safety
 * `seg` must be a live handle; `out` must have room for `len` doubles.
 */
enum CsStatus cs_segmentation_energy(const struct CsSegmentation *seg, double *out, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONVEXSEG_H */
