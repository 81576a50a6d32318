#ifndef TRANSLAB_H
#define TRANSLAB_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum tl_status {
  TL_STATUS_OK = 0,
  TL_STATUS_NULL_POINTER = 1,
  TL_STATUS_INVALID_ARGUMENT = 2,
  TL_STATUS_NUMERICAL = 3,
  TL_STATUS_IO = 4,
  TL_STATUS_PANIC = 5,
} tl_status;

typedef enum tl_family {
  TL_FAMILY_PITCHFORK = 0,
  TL_FAMILY_HELICOID = 1,
  TL_FAMILY_YETI = 2,
} tl_family;

/**
 * Sampled scalar field on a uniform grid.
 */
typedef struct tl_field tl_field;

/**
 * Triangulated surface.
 */
typedef struct tl_mesh tl_mesh;

/**
 * Parameters of a capped solve. Start from [`tl_solve_options_default`].
 */
typedef struct tl_solve_options {
  enum tl_family family;
  /**
   * Strip width; unused by the yeti.
   */
  double w;
  /**
   * Helicoid top-edge jump.
   */
  double a;
  double x_min;
  double x_max;
  double y_min;
  double y_max;
  double h;
  double cap;
  uint32_t max_newton_iters;
  double residual_tol;
} tl_solve_options;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *tl_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tl_version(void);

/**
 * Samples the tilted grim reaper `c^2 log cos((y - y_center)/c) + tilt x sqrt(c^2 - 1) + shift`
 * on an `nx` by `ny` grid. `tilt` is -1, 0 or 1.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum tl_status tl_reaper_sample(double c,
                                int32_t tilt,
                                double shift,
                                double y_center,
                                double x_min,
                                double x_max,
                                double y_min,
                                double y_max,
                                size_t nx,
                                size_t ny,
                                struct tl_field **out);

/**
 * Reads a field from its CSV file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum tl_status tl_field_read(const char *path, struct tl_field **out);

/**
 * # Safety
 * `f` must be a live handle and `path` a NUL-terminated string.
 */
enum tl_status tl_field_write(const struct tl_field *f, const char *path);

/**
 * # Safety
 * `f` must be a live handle; `nx` and `ny` valid pointers.
 */
enum tl_status tl_field_dims(const struct tl_field *f, size_t *nx, size_t *ny);

/**
 * Writes `[x_min, x_max, y_min, y_max]` into `bounds`.
 *
 * # Safety
 * `f` must be a live handle and `bounds` point to 4 writable doubles.
 */
enum tl_status tl_field_bounds(const struct tl_field *f, double *bounds);

/**
 * Value at node `(i, j)`.
 *
 * # Safety
 * `f` must be a live handle and `out` a valid pointer.
 */
enum tl_status tl_field_at(const struct tl_field *f, size_t i, size_t j, double *out);

/**
 * Copies all values, row-major with `x` fastest, into `buf`.
 *
 * # Safety
 * `f` must be a live handle and `buf` point to `len` writable doubles.
 */
enum tl_status tl_field_values(const struct tl_field *f, double *buf, size_t len);

/**
 * Max-norm of the discrete translator residual over interior nodes.
 *
 * # Safety
 * `f` must be a live handle and `out` a valid pointer.
 */
enum tl_status tl_field_residual(const struct tl_field *f, double *out);

/**
 * # Safety
 * `f` must be null or a handle not yet freed.
 */
void tl_field_free(struct tl_field *f);

/**
 * Defaults for `family`: `[-12, 12]`, margin 0.05 from the strip edges
 * (yeti: `y` up to 6), `h = 0.1`, cap 6.
 */
struct tl_solve_options tl_solve_options_default(enum tl_family family);

/**
 * Solves a capped preset. `init` may be null for the default initial guess.
 *
 * # Safety
 * `opts` and `out` must be valid pointers; `init` null or a live handle.
 */
enum tl_status tl_solve(const struct tl_solve_options *opts,
                        const struct tl_field *init,
                        struct tl_field **out);

/**
 * Assembles a pitchfork (`copies` must be 1) or a helicoid with `copies`
 * reflected copies from a solved field.
 *
 * # Safety
 * `f` must be a live handle and `out` a valid pointer.
 */
enum tl_status tl_assemble(const struct tl_field *f,
                           enum tl_family family,
                           double a,
                           double w,
                           size_t copies,
                           size_t levels,
                           struct tl_mesh **out);

/**
 * # Safety
 * `m` must be a live handle; `vertices` and `triangles` valid pointers.
 */
enum tl_status tl_mesh_counts(const struct tl_mesh *m, size_t *vertices, size_t *triangles);

/**
 * # Safety
 * `m` must be a live handle and `path` a NUL-terminated string.
 */
enum tl_status tl_mesh_write_obj(const struct tl_mesh *m, const char *path);

/**
 * # Safety
 * `m` must be null or a handle not yet freed.
 */
void tl_mesh_free(struct tl_mesh *m);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRANSLAB_H */
