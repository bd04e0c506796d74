#ifndef VALVEFIT_H
#define VALVEFIT_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum VfStatus {
  VF_STATUS_OK = 0,
  VF_STATUS_NULL_POINTER = 1,
  VF_STATUS_INVALID_ARGUMENT = 2,
  VF_STATUS_PARSE = 3,
  VF_STATUS_IO = 4,
  VF_STATUS_DOMAIN = 5,
  VF_STATUS_DEGENERATE = 6,
  VF_STATUS_NON_FINITE = 7,
  VF_STATUS_ALIGNMENT = 8,
  VF_STATUS_FIT_FAILURE = 9,
  VF_STATUS_PANIC = 10,
} VfStatus;

/**
 * Point cloud handle.
 */
typedef struct VfCloud VfCloud;

/**
 * Spline surface handle.
 */
typedef struct VfSurface VfSurface;

typedef struct VfWeights {
  double w_cd;
  double w_hd;
  double w_a;
  double w_orth;
  double w_tpe;
  double w_norm;
  double tpe_alpha;
  bool tpe_skip_boundary;
} VfWeights;

typedef struct VfFitOptions {
  double step;
  size_t t_max;
  struct VfWeights weights;
  size_t samples_u;
  size_t samples_v;
  size_t record_every;
  /**
   * Similarity-align the template to the cloud before fitting.
   */
  bool prealign;
} VfFitOptions;

typedef struct VfLoss {
  double total;
  double d_cd;
  double d_hd;
  double d_a;
  double r_orth;
  double r_tpe;
  double r_norm;
} VfLoss;

typedef struct VfSnndSummary {
  double min;
  double max;
  double mean;
  double area;
  size_t points;
  size_t samples;
} VfSnndSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *vf_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *vf_version(void);

struct VfWeights vf_weights_validation(void);

struct VfWeights vf_weights_patient(void);

struct VfFitOptions vf_fit_options_default(void);

/**
 * Default valve template.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum VfStatus vf_template_default(struct VfSurface **out);

/**
 * Template with the given size and control grid; other settings default.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum VfStatus vf_template_new(double radius,
                              double height,
                              size_t leaflets,
                              size_t n_axial,
                              size_t n_circ,
                              struct VfSurface **out);

/**
 * Synthetic closing-valve surface at `closure` in `[0, 1]`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum VfStatus vf_synth_surface(double closure, uint64_t seed, struct VfSurface **out);

/**
 * Loads a surface in the native text format.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` a valid pointer.
 */
enum VfStatus vf_surface_load(const char *path, struct VfSurface **out);

/**
 * Saves a surface; paths ending in `.obj` get a quad mesh.
 *
 * # Safety
 * `surface` must come from this library; `path` must be NUL-terminated.
 */
enum VfStatus vf_surface_save(const struct VfSurface *surface, const char *path);

/**
 * Control grid size.
 *
 * # Safety
 * `surface` must come from this library; the outputs must be valid.
 */
enum VfStatus vf_surface_grid(const struct VfSurface *surface, size_t *n_axial, size_t *n_circ);

/**
 * Copies the control points as `x, y, z` triples, row by row (axial index
 * outer). `len` is the capacity of `xyz` in doubles and must be at least
 * `3 * n_axial * n_circ`.
 *
 * # Safety
 * `xyz` must point to `len` writable doubles.
 */
enum VfStatus vf_surface_control_points(const struct VfSurface *surface, double *xyz, size_t len);

/**
 * Point `S(u, v)` written to `xyz[0..3]`.
 *
 * # Safety
 * `xyz` must point to 3 writable doubles.
 */
enum VfStatus vf_surface_point(const struct VfSurface *surface, double u, double v, double *xyz);

/**
 * # Safety
 * `surface` must come from this library (or be null) and not be used
 * afterwards.
 */
void vf_surface_free(struct VfSurface *surface);

/**
 * Unlabelled cloud from `n` packed `x, y, z` triples.
 *
 * # Safety
 * `xyz` must point to `3 * n` readable doubles; `out` must be valid.
 */
enum VfStatus vf_cloud_from_xyz(const double *xyz, size_t n, struct VfCloud **out);

/**
 * Loads an `x,y,z[,label]` text cloud.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be valid.
 */
enum VfStatus vf_cloud_load(const char *path, struct VfCloud **out);

/**
 * Poisson-disk cloud of about `count` points on `surface`.
 *
 * # Safety
 * `surface` must come from this library; `out` must be valid.
 */
enum VfStatus vf_cloud_sample(const struct VfSurface *surface,
                              size_t count,
                              uint64_t seed,
                              struct VfCloud **out);

/**
 * Number of points, 0 for a null handle.
 *
 * # Safety
 * `cloud` must come from this library or be null.
 */
size_t vf_cloud_len(const struct VfCloud *cloud);

/**
 * # Safety
 * `cloud` must come from this library (or be null) and not be used
 * afterwards.
 */
void vf_cloud_free(struct VfCloud *cloud);

/**
 * Fits `template` to `cloud`. On success `*out` receives the fitted surface
 * and `*final_loss` (if not null) its loss. When the fit gives up,
 * `VF_STATUS_FIT_FAILURE` is returned and `*out` holds the last surface that
 * evaluated cleanly.
 *
 * # Safety
 * Handles must come from this library; `options` may be null for defaults.
 */
enum VfStatus vf_fit(const struct VfSurface *template_,
                     const struct VfCloud *cloud,
                     const struct VfFitOptions *options,
                     struct VfSurface **out,
                     struct VfLoss *final_loss);

/**
 * sNND statistics of `cloud` against `surface`.
 *
 * # Safety
 * Handles must come from this library; `out` must be valid.
 */
enum VfStatus vf_evaluate(const struct VfSurface *surface,
                          const struct VfCloud *cloud,
                          struct VfSnndSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VALVEFIT_H */
