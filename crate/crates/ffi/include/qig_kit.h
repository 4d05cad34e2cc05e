#ifndef QIG_KIT_H
#define QIG_KIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum QigStatus {
  QIG_STATUS_OK = 0,
  QIG_STATUS_NULL_POINTER = 1,
  QIG_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Input outside the mathematical domain (pure or boundary reductions included).
   */
  QIG_STATUS_DOMAIN = 3,
  /**
   * A regularity guard rejected the point (gap, rank, Brioschi, chart).
   */
  QIG_STATUS_GUARD = 4,
  /**
   * No stable finite-difference step, or a singular metric.
   */
  QIG_STATUS_NUMERICAL = 5,
  QIG_STATUS_CONFIG = 6,
  QIG_STATUS_IO = 7,
  QIG_STATUS_BUFFER_TOO_SMALL = 8,
  QIG_STATUS_PANIC = 9,
} QigStatus;

/**
 * Opaque Petz tensor field over a circuit.
 */
typedef struct QigField QigField;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *qig_version(void);

/**
 * Copy of the last error on this thread, or NULL if none. Free with `qig_string_free`.
 */
char *qig_last_error_message(void);

/**
 * Release a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void qig_string_free(char *s);

/**
 * Field on the four-parameter ansatz with metric `"sld"`, `"wy"` or `"bkm"`.
 *
 * # Safety
 * `metric` must be a NUL-terminated string; `out` must be writable.
 */
enum QigStatus qig_field_new(const char *metric, struct QigField **out);

/**
 * Field on a layered circuit of `depth` blocks; `entanglers` is a bit set
 * (1 = ZZ, 2 = XX) applied in every block.
 *
 * # Safety
 * As for [`qig_field_new`].
 */
enum QigStatus qig_field_new_circuit(const char *metric,
                                     uint32_t depth,
                                     uint32_t entanglers,
                                     struct QigField **out);

/**
 * Release a field. NULL is ignored.
 *
 * # Safety
 * `field` must come from a `qig_field_new*` call and not have been freed.
 */
void qig_field_free(struct QigField *field);

/**
 * Number of circuit parameters, or 0 for a NULL handle.
 *
 * # Safety
 * `field` must be NULL or a live handle.
 */
size_t qig_field_n_params(const struct QigField *field);

/**
 * `F(theta)` written row-major into `out` (capacity `out_len`, needs `m * m`).
 *
 * # Safety
 * `theta` must hold `n_theta` doubles and `out` `out_len` doubles.
 */
enum QigStatus qig_fisher(const struct QigField *field,
                          const double *theta,
                          size_t n_theta,
                          double *out,
                          size_t out_len);

/**
 * Scalar curvature of the support-projected metric with the default
 * configuration and the given metric scale; the chosen step goes to `out_h`
 * when it is not NULL.
 *
 * # Safety
 * `theta` must hold `n_theta` doubles; `out_r` must be writable.
 */
enum QigStatus qig_scalar_curvature(const struct QigField *field,
                                    const double *theta,
                                    size_t n_theta,
                                    double metric_scale,
                                    double *out_r,
                                    double *out_h);

/**
 * `2 (6 c^2 - 5) / (c^2 - 1)` for `0 <= c < 1`.
 *
 * # Safety
 * `out` must be writable.
 */
enum QigStatus qig_kskd(double c, double *out);

/**
 * JSON point report on the four-parameter ansatz. Free the result with
 * `qig_string_free`.
 *
 * # Safety
 * `theta` must hold `n_theta` doubles; `out_json` must be writable.
 */
enum QigStatus qig_point_report_json(const struct QigField *field,
                                     const double *theta,
                                     size_t n_theta,
                                     char **out_json);

/**
 * Run a VQE experiment described by `config_json`; the result is a JSON
 * object with the trace and summary metrics.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `out_json` must be writable.
 */
enum QigStatus qig_vqe_run_json(const char *config_json, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QIG_KIT_H */
