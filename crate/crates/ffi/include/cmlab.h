#ifndef CMLAB_H
#define CMLAB_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum {
  CmlabStatus_Ok = 0,
  CmlabStatus_InvalidArgument = 1,
  CmlabStatus_RuntimeError = 2,
  CmlabStatus_NullPointer = 3,
  CmlabStatus_Utf8Error = 4,
  CmlabStatus_TestFailure = 5,
  CmlabStatus_Panic = 6,
} CmlabStatus;

/**
 * Opaque reproducible RNG stream.
 */
typedef struct CmlabRng CmlabRng;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message for this thread, or NULL if none. Borrowed pointer;
 * valid until the next failing call on the same thread.
 */
const char *cmlab_last_error_message(void);

/**
 * Library version string (static storage).
 */
const char *cmlab_version(void);

/**
 * Create a stream from (seed, stream_id). Same pair, same sequence.
 */
CmlabStatus cmlab_rng_new(uint64_t seed, uint64_t stream_id, CmlabRng **out);

/**
 * Destroy a stream created by `cmlab_rng_new`.
 *
 * # Safety
 * `rng` must be a pointer previously returned by `cmlab_rng_new` and not
 * freed since.
 */
void cmlab_rng_free(CmlabRng *rng);

/**
 * Fill `out[0..n]` with draws of `2K(1) - B(1)` from the exact Poisson
 * construction.
 *
 * # Safety
 * `rng` must be a live handle; `out` must point to at least `n` doubles.
 */
CmlabStatus cmlab_sample_chi5(CmlabRng *rng, double *out, uintptr_t n);

/**
 * Fill six parallel buffers with the straddling-face state at t = 1:
 * slope, value, intercept, gap, left vertex, right vertex.
 *
 * # Safety
 * `rng` must be a live handle; each buffer must hold at least `n` doubles.
 */
CmlabStatus cmlab_sample_straddle(CmlabRng *rng,
                                  double *kprime,
                                  double *k,
                                  double *intercept,
                                  double *gap,
                                  double *g1,
                                  double *d1,
                                  uintptr_t n);

/**
 * Fill `ds`/`dz` with zenith increments for slopes `0 < b < a`.
 *
 * # Safety
 * `rng` must be a live handle; `ds` and `dz` must hold `n` doubles each.
 */
CmlabStatus cmlab_sample_zenith(CmlabRng *rng,
                                double a,
                                double b,
                                double *ds,
                                double *dz,
                                uintptr_t n);

/**
 * Evaluate the joint density of (K'(1), I(1), K(1) - B(1)).
 */
double cmlab_f3_density(double a, double b, double y);

/**
 * Evaluate the zenith increment density `h^{a,b}(s, z)`; returns a
 * negative value on invalid parameters.
 */
double cmlab_zenith_density(double a, double b, double s, double z);

/**
 * Gaussian kernels: writes (pdf, tail, mills) at `x`.
 *
 * # Safety
 * The three output pointers must be valid.
 */
CmlabStatus cmlab_gaussian_kernels(double x, double *pdf, double *tail, double *mills);

/**
 * Run a registered experiment; `params_json` (may be NULL) is a JSON
 * object of numeric overrides. On success `out_json` receives a JSON
 * array of test reports (free with `cmlab_string_free`). Returns
 * `TestFailure` when the experiment ran but a pass-semantics test failed.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `params_json` NULL or
 * NUL-terminated; `out_json` a valid pointer.
 */
CmlabStatus cmlab_run_experiment(const char *name,
                                 const char *params_json,
                                 uint64_t seed,
                                 char **out_json);

/**
 * Newline-separated registry listing (free with `cmlab_string_free`).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
CmlabStatus cmlab_registry_list(char **out);

/**
 * Free a string returned by this library.
 *
 * # Safety
 * `s` must have been returned by a cmlab function and not freed since.
 */
void cmlab_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* CMLAB_H */
