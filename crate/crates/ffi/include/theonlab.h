#ifndef THEONLAB_H
#define THEONLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Largest vertex count accepted by [`tl_theon_sample`]; a point stores one
 * coordinate block per vertex subset.
 */
#define TL_MAX_SAMPLE_VERTICES 16

/**
 * Result of every fallible call.
 */
typedef enum TlStatus {
  TL_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  TL_STATUS_NULL_POINTER = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  TL_STATUS_INVALID_UTF8 = 2,
  /**
   * A parameter, theon or model was rejected.
   */
  TL_STATUS_INVALID_ARGUMENT = 3,
  /**
   * No catalog entry or command by that name.
   */
  TL_STATUS_UNKNOWN_NAME = 4,
  /**
   * Text could not be parsed.
   */
  TL_STATUS_SYNTAX = 5,
  /**
   * A model does not fit the theon's signature or theory.
   */
  TL_STATUS_INVALID_MODEL = 6,
  /**
   * A panic was caught at the boundary.
   */
  TL_STATUS_INTERNAL = 7,
} TlStatus;

/**
 * Opaque model handle.
 */
typedef struct TlModel TlModel;

/**
 * Opaque theon handle.
 */
typedef struct TlTheon TlTheon;

/**
 * Labeled and unlabeled density estimates with standard errors.
 */
typedef struct TlDensity {
  double labeled;
  double labeled_stderr;
  double unlabeled;
  double unlabeled_stderr;
} TlDensity;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *tl_version(void);

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call or [`tl_clear_error`].
 */
const char *tl_last_error(void);

void tl_clear_error(void);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` is null or was returned by this library and not yet freed.
 */
void tl_string_free(char *s);

/**
 * Builds a theon from a catalog name or expression (`qr-graphon:p=1/2`,
 * `diag(...)`, `interp(...;...)`) or from a JSON theon document.
 *
 * # Safety
 * `spec` is a NUL-terminated string; `out` points to writable storage.
 */
enum TlStatus tl_theon_new(const char *spec, struct TlTheon **out);

/**
 * # Safety
 * `t` is null or a handle from [`tl_theon_new`] not yet freed.
 */
void tl_theon_free(struct TlTheon *t);

/**
 * Number of ground-space factors, or 0 for a null handle.
 *
 * # Safety
 * `t` is null or a live theon handle.
 */
size_t tl_theon_dim(const struct TlTheon *t);

/**
 * Largest predicate arity, or 0 for a null handle.
 *
 * # Safety
 * `t` is null or a live theon handle.
 */
size_t tl_theon_max_arity(const struct TlTheon *t);

/**
 * The theon's name as a new string.
 *
 * # Safety
 * `t` is a live theon handle; `out` points to writable storage.
 */
enum TlStatus tl_theon_name(const struct TlTheon *t, char **out);

/**
 * Realizes the theon on `n` vertices from a point drawn with `seed`.
 * The same seed always gives the same model.
 *
 * # Safety
 * `t` is a live theon handle; `out` points to writable storage.
 */
enum TlStatus tl_theon_sample(const struct TlTheon *t,
                              size_t n,
                              uint64_t seed,
                              struct TlModel **out);

/**
 * Parses a model in the text format (`n=3`, then `E: (1,2);(2,3)` lines)
 * over the theon's signature.
 *
 * # Safety
 * `t` is a live theon handle; `model_text` is a NUL-terminated string;
 * `out` points to writable storage.
 */
enum TlStatus tl_model_parse(const struct TlTheon *t, const char *model_text, struct TlModel **out);

/**
 * # Safety
 * `m` is null or a model handle not yet freed.
 */
void tl_model_free(struct TlModel *m);

/**
 * Vertex count, or 0 for a null handle.
 *
 * # Safety
 * `m` is null or a live model handle.
 */
size_t tl_model_n(const struct TlModel *m);

/**
 * Whether the 0-based tuple of length `len` lies in predicate `pred`.
 * Writes the answer to `out`.
 *
 * # Safety
 * `m` is a live model handle; `tuple` points to `len` readable values;
 * `out` points to writable storage.
 */
enum TlStatus tl_model_contains(const struct TlModel *m,
                                size_t pred,
                                const size_t *tuple,
                                size_t len,
                                bool *out);

/**
 * The model in the text format as a new string.
 *
 * # Safety
 * `m` is a live model handle; `out` points to writable storage.
 */
enum TlStatus tl_model_to_text(const struct TlModel *m, char **out);

/**
 * Monte Carlo estimate of how often the theon realizes `m` (labeled) and a
 * copy of `m` (unlabeled) on `n(m)` vertices. Deterministic in `seed`.
 *
 * # Safety
 * `t` and `m` are live handles; `out` points to writable storage.
 */
enum TlStatus tl_density(const struct TlTheon *t,
                         const struct TlModel *m,
                         uint64_t samples,
                         uint64_t seed,
                         struct TlDensity *out);

/**
 * Runs a harness invocation given as JSON
 * (`{"command": "density", "params": {...}, "seed": 1, "n_samples": 1000}`)
 * and returns the report as a JSON string. `exit_code` may be null; it
 * receives 0 for pass or estimate and 1 for reject or fail.
 *
 * # Safety
 * `invocation_json` is a NUL-terminated string; `report_json` points to
 * writable storage; `exit_code` is null or writable.
 */
enum TlStatus tl_execute(const char *invocation_json, char **report_json, int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* THEONLAB_H */
