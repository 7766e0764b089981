#ifndef COMPOP_H
#define COMPOP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum CompopStatus {
  COMPOP_STATUS_OK = 0,
  COMPOP_STATUS_INVALID_ARGUMENT = 1,
  COMPOP_STATUS_NULL_POINTER = 2,
  COMPOP_STATUS_SPEC = 3,
  COMPOP_STATUS_UNBOUNDED = 4,
  COMPOP_STATUS_MEMORY_GUARD = 5,
  COMPOP_STATUS_UNSUPPORTED = 6,
  COMPOP_STATUS_NUMERIC = 7,
  COMPOP_STATUS_SOUNDNESS = 8,
  COMPOP_STATUS_IO = 9,
  COMPOP_STATUS_PANIC = 10,
} CompopStatus;

/**
 * Compressed approximation numbers, descending.
 */
typedef struct CompopSpectrum CompopSpectrum;

/**
 * A validated self-map of a product of balls.
 */
typedef struct CompopSymbol CompopSymbol;

/**
 * Decay fit summary. Absent values are NaN.
 */
typedef struct CompopDecayFit {
  size_t window_lo;
  size_t window_hi;
  double gamma_minus;
  double gamma_plus;
  double slope;
  double intercept;
  double residual;
  double stretch_exponent;
  double stretch_exponent_offset;
} CompopDecayFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next call into this library on the same thread.
 */
const char *compop_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *compop_version(void);

/**
 * Parses a symbol document (the CLI's JSON format) and validates it.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum CompopStatus compop_symbol_from_json(const char *json,
                                          uint64_t seed,
                                          struct CompopSymbol **out);

/**
 * # Safety
 * `sym` must come from [`compop_symbol_from_json`] and not be freed twice.
 */
void compop_symbol_free(struct CompopSymbol *sym);

/**
 * Ambient dimension of the symbol's domain; 0 for a null handle.
 *
 * # Safety
 * `sym` must be null or a live handle.
 */
size_t compop_symbol_dim(const struct CompopSymbol *sym);

/**
 * Compressed approximation numbers at degree `p`. `max_basis = 0` uses the
 * default guard.
 *
 * # Safety
 * `sym` must be a live handle and `out` a writable pointer.
 */
enum CompopStatus compop_approx_numbers(const struct CompopSymbol *sym,
                                        uint32_t p,
                                        uint64_t max_basis,
                                        struct CompopSpectrum **out);

/**
 * # Safety
 * `spec` must be null or a live handle.
 */
size_t compop_spectrum_len(const struct CompopSpectrum *spec);

/**
 * Borrowed pointer to the values; valid until the handle is freed.
 *
 * # Safety
 * `spec` must be null or a live handle.
 */
const double *compop_spectrum_data(const struct CompopSpectrum *spec);

/**
 * # Safety
 * `spec` must come from [`compop_approx_numbers`] and not be freed twice.
 */
void compop_spectrum_free(struct CompopSpectrum *spec);

/**
 * Squared Hilbert-Schmidt norm of the degree-`p` compression.
 *
 * # Safety
 * `sym` must be a live handle and `out` writable.
 */
enum CompopStatus compop_hs_norm_sq(const struct CompopSymbol *sym,
                                    uint32_t p,
                                    uint64_t max_basis,
                                    double *out);

/**
 * Number of multi-indices in `d` variables of degree at most `p`.
 *
 * # Safety
 * `out` must be writable.
 */
enum CompopStatus compop_count_upto(size_t d, uint64_t p, uint64_t *out);

/**
 * Norm ratio of the duplicate map on `(z₁ + z₂)^n`.
 *
 * # Safety
 * `out` must be writable.
 */
enum CompopStatus compop_witness(uint32_t n, double *out);

/**
 * Truncation tail bound for a symbol with sup-norm `r` on the domain with
 * the given block sizes. A negative `n` gives the untruncated sum.
 *
 * # Safety
 * `blocks` must point to `n_blocks` readable values and `out` be writable.
 */
enum CompopStatus compop_tail_upper(const size_t *blocks,
                                    size_t n_blocks,
                                    double r,
                                    int64_t n,
                                    double *out);

/**
 * Decay fit of a non-increasing sample. `lo = hi = 0` selects the default
 * window.
 *
 * # Safety
 * `a` must point to `len` readable values and `out` be writable.
 */
enum CompopStatus compop_gamma_estimate(const double *a,
                                        size_t len,
                                        size_t d,
                                        size_t lo,
                                        size_t hi,
                                        struct CompopDecayFit *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COMPOP_H */
