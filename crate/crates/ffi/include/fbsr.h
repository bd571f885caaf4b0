/* C interface for the fbsr rounding and bias-analysis library. */

#ifndef FBSR_H
#define FBSR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Rounding rule selector.
 */
typedef enum FbsrMode {
  /**
   * Nearest, ties away from zero.
   */
  FbsrMode_Ta = 0,
  /**
   * Nearest, ties to even.
   */
  FbsrMode_Tne = 1,
  /**
   * Nearest, ties to odd.
   */
  FbsrMode_Tno = 2,
  /**
   * Stochastic, fast form.
   */
  FbsrMode_Srff = 3,
  /**
   * Stochastic, offset form.
   */
  FbsrMode_Srf = 4,
  /**
   * Stochastic with deterministic pre-correction.
   */
  FbsrMode_Src = 5,
} FbsrMode;

/**
 * Result of every fallible call.
 */
typedef enum FbsrStatus {
  /**
   * Success; out-parameters are filled in.
   */
  FbsrStatus_Ok = 0,
  /**
   * A required pointer argument was null.
   */
  FbsrStatus_NullArgument = 1,
  /**
   * An argument failed validation (unknown name, bad bit count,
   * malformed value).
   */
  FbsrStatus_InvalidArgument = 2,
  /**
   * The request is structurally unsupported (no closed form, grid
   * too large to enumerate).
   */
  FbsrStatus_Unsupported = 3,
  /**
   * The result exists but cannot be represented in the requested
   * output (value beyond the format's range, numerator beyond 64
   * bits).
   */
  FbsrStatus_OutOfRange = 4,
  /**
   * The value is not exactly representable where exactness is
   * required.
   */
  FbsrStatus_Inexact = 5,
} FbsrStatus;

/**
 * Tie rule for deterministic nearest-rounding steps.
 */
typedef enum FbsrTies {
  FbsrTies_Even = 0,
  FbsrTies_Odd = 1,
} FbsrTies;

/**
 * Stochastic variant selector for the bias evaluators.
 */
typedef enum FbsrVariant {
  FbsrVariant_Srff = 0,
  FbsrVariant_Srf = 1,
  FbsrVariant_Src = 2,
} FbsrVariant;

/**
 * Opaque handle for a random-bit source.
 */
typedef struct FbsrBitSource FbsrBitSource;

/**
 * Opaque handle for a binary floating-point format.
 */
typedef struct FbsrFormat FbsrFormat;

/**
 * An exact dyadic rational `numerator * 2^exponent`, numerator odd
 * (or the zero value) in canonical results.
 */
typedef struct FbsrDyadic {
  int64_t numerator;
  int32_t exponent;
} FbsrDyadic;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *fbsr_version(void);

/**
 * Create a format from a preset name (`bfloat16`, `binary8p4`,
 * `p3`).
 *
 * # Safety
 * `name` must point to a NUL-terminated string and `out` to writable
 * memory for one pointer.
 */
enum FbsrStatus fbsr_format_preset(const char *name, struct FbsrFormat **out);

/**
 * Create a custom format from its parameter triple.
 *
 * # Safety
 * `out` must point to writable memory for one pointer.
 */
enum FbsrStatus fbsr_format_new(uint32_t precision,
                                int32_t exp_bias,
                                uint32_t max_biased_exp,
                                struct FbsrFormat **out);

/**
 * Release a format handle. Null is a no-op.
 *
 * # Safety
 * `fmt` must be null or a pointer previously returned by a format
 * constructor and not yet freed.
 */
void fbsr_format_free(struct FbsrFormat *fmt);

/**
 * Significand precision in bits (leading bit included).
 *
 * # Safety
 * `fmt` must be a live format handle or null; `out` must be writable.
 */
enum FbsrStatus fbsr_format_precision(const struct FbsrFormat *fmt, uint32_t *out);

/**
 * Exponent bias.
 *
 * # Safety
 * `fmt` must be a live format handle or null; `out` must be writable.
 */
enum FbsrStatus fbsr_format_exp_bias(const struct FbsrFormat *fmt, int32_t *out);

/**
 * Maximum biased exponent.
 *
 * # Safety
 * `fmt` must be a live format handle or null; `out` must be writable.
 */
enum FbsrStatus fbsr_format_max_biased_exp(const struct FbsrFormat *fmt, uint32_t *out);

/**
 * Largest finite value of the format.
 *
 * # Safety
 * `fmt` must be a live format handle or null; `out` must be writable.
 */
enum FbsrStatus fbsr_format_max_finite(const struct FbsrFormat *fmt, struct FbsrDyadic *out);

/**
 * Create a seeded pseudorandom bit source.
 */
struct FbsrBitSource *fbsr_bitsource_seeded(uint64_t seed);

/**
 * Create the exhaustively cycling counter source (draw k yields
 * k mod 2^bits).
 */
struct FbsrBitSource *fbsr_bitsource_counter(void);

/**
 * Create a source that returns `value` (masked to the drawn width)
 * on every draw.
 */
struct FbsrBitSource *fbsr_bitsource_fixed(uint64_t value);

/**
 * Release a bit-source handle. Null is a no-op.
 *
 * # Safety
 * `source` must be null or a pointer previously returned by a
 * bit-source constructor and not yet freed.
 */
void fbsr_bitsource_free(struct FbsrBitSource *source);

/**
 * Draw `bits` random bits (1..=32) from the source.
 *
 * # Safety
 * `source` must be a live bit-source handle or null; `out` must be
 * writable.
 */
enum FbsrStatus fbsr_bitsource_next(struct FbsrBitSource *source, uint32_t bits, uint64_t *out);

/**
 * Round `value` into `fmt` under the selected rule.
 *
 * `bits` and `ties` are read only by the stochastic modes (`ties`
 * only by the pre-corrected one). `source` may be null for the
 * deterministic modes; the stochastic modes require it. Values beyond
 * the format's range saturate to the largest finite value, matching
 * the library's rounding semantics.
 *
 * # Safety
 * `fmt` must be a live format handle or null, `source` null or a live
 * bit-source handle, and `out` writable.
 */
enum FbsrStatus fbsr_round(struct FbsrDyadic value,
                           const struct FbsrFormat *fmt,
                           enum FbsrMode mode,
                           uint32_t bits,
                           enum FbsrTies ties,
                           struct FbsrBitSource *source,
                           struct FbsrDyadic *out);

/**
 * Fractional remainder of `value` against `fmt`, in [0, 1): the
 * distance past the lower rounding candidate in units of the gap.
 *
 * # Safety
 * `fmt` must be a live format handle or null; `out` must be writable.
 */
enum FbsrStatus fbsr_delta(struct FbsrDyadic value,
                           const struct FbsrFormat *fmt,
                           struct FbsrDyadic *out);

/**
 * Exact grid-average bias by exhaustive enumeration, in
 * destination-spacing units.
 *
 * # Safety
 * `out` must point to writable memory.
 */
enum FbsrStatus fbsr_bias_enumerated(enum FbsrVariant variant,
                                     uint32_t bits,
                                     uint32_t excess,
                                     enum FbsrTies ties,
                                     struct FbsrDyadic *out);

/**
 * Exact grid-average bias via the floor-character sum (fast and
 * offset variants only).
 *
 * # Safety
 * `out` must point to writable memory.
 */
enum FbsrStatus fbsr_bias_floor_sum(enum FbsrVariant variant,
                                    uint32_t bits,
                                    uint32_t excess,
                                    struct FbsrDyadic *out);

/**
 * Closed-form bias value or bound. `excess` may be null for the
 * infinite-excess-precision limit.
 *
 * # Safety
 * `excess` must be null or point to a readable u32; `out` must be
 * writable.
 */
enum FbsrStatus fbsr_bias_closed(enum FbsrVariant variant,
                                 uint32_t bits,
                                 const uint32_t *excess,
                                 struct FbsrDyadic *out);

/**
 * Nearest binary64 value of a dyadic (ties to even, overflow
 * saturates to infinity).
 */
double fbsr_dyadic_to_double(struct FbsrDyadic value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FBSR_H */
