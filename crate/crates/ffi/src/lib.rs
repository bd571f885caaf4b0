//! C ABI for the rounding and bias-analysis library.
//!
//! Conventions:
//!
//! - Every fallible function returns an [`FbsrStatus`] and writes its
//!   result through an out-pointer, which is touched only on
//!   [`FbsrStatus::Ok`].
//! - Handles ([`FbsrFormat`], [`FbsrBitSource`]) are opaque. Create
//!   them with the constructor functions and release them with the
//!   matching `_free`; a null handle where one is required yields
//!   [`FbsrStatus::NullArgument`], never a crash.
//! - Exact values cross the boundary as [`FbsrDyadic`]
//!   (`numerator * 2^exponent`). Results whose numerator needs more
//!   than 64 bits report [`FbsrStatus::OutOfRange`] instead of
//!   truncating.
//!
//! The generated header lands in `include/fbsr.h` at build time.

use core::ffi::{c_char, CStr};

use fbsr::{
    bias_closed, bias_enumerated, bias_floor_sum_srf, bias_floor_sum_srff, decompose, round,
    BitSource, Dyadic, Error, FloatFormat, InnerRound, RoundingSpec, SrVariant,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FbsrStatus {
    /// Success; out-parameters are filled in.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// An argument failed validation (unknown name, bad bit count,
    /// malformed value).
    InvalidArgument = 2,
    /// The request is structurally unsupported (no closed form, grid
    /// too large to enumerate).
    Unsupported = 3,
    /// The result exists but cannot be represented in the requested
    /// output (value beyond the format's range, numerator beyond 64
    /// bits).
    OutOfRange = 4,
    /// The value is not exactly representable where exactness is
    /// required.
    Inexact = 5,
}

/// Rounding rule selector.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FbsrMode {
    /// Nearest, ties away from zero.
    Ta = 0,
    /// Nearest, ties to even.
    Tne = 1,
    /// Nearest, ties to odd.
    Tno = 2,
    /// Stochastic, fast form.
    Srff = 3,
    /// Stochastic, offset form.
    Srf = 4,
    /// Stochastic with deterministic pre-correction.
    Src = 5,
}

/// Tie rule for deterministic nearest-rounding steps.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FbsrTies {
    Even = 0,
    Odd = 1,
}

/// Stochastic variant selector for the bias evaluators.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FbsrVariant {
    Srff = 0,
    Srf = 1,
    Src = 2,
}

/// An exact dyadic rational `numerator * 2^exponent`, numerator odd
/// (or the zero value) in canonical results.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FbsrDyadic {
    pub numerator: i64,
    pub exponent: i32,
}

/// Opaque handle for a binary floating-point format.
pub struct FbsrFormat(FloatFormat);

/// Opaque handle for a random-bit source.
pub struct FbsrBitSource(BitSource);

fn status_of(err: &Error) -> FbsrStatus {
    match err {
        Error::InvalidFormat(_)
        | Error::UnknownPreset(_)
        | Error::DecomposeZero
        | Error::BitCount(_)
        | Error::ZeroExcess
        | Error::EmptyGrid
        | Error::InvalidMonteCarlo(_)
        | Error::InvalidQat(_) => FbsrStatus::InvalidArgument,
        Error::NoSuccessor | Error::OutOfRange { .. } => FbsrStatus::OutOfRange,
        Error::NotRepresentable(_) => FbsrStatus::Inexact,
        Error::EnumerationTooLarge(_)
        | Error::BiasGridTooLarge { .. }
        | Error::FloorSumTooLarge { .. }
        | Error::NoClosedForm => FbsrStatus::Unsupported,
    }
}

fn export_dyadic(value: Dyadic, out: *mut FbsrDyadic) -> FbsrStatus {
    let numerator = value.numerator();
    if numerator < i64::MIN as i128 || numerator > i64::MAX as i128 {
        return FbsrStatus::OutOfRange;
    }
    // Safety contract of the callers: `out` is non-null and writable.
    unsafe {
        *out = FbsrDyadic {
            numerator: numerator as i64,
            exponent: value.exponent(),
        };
    }
    FbsrStatus::Ok
}

fn import_dyadic(value: FbsrDyadic) -> Dyadic {
    Dyadic::new(value.numerator as i128, value.exponent)
}

fn variant_of(variant: FbsrVariant) -> SrVariant {
    match variant {
        FbsrVariant::Srff => SrVariant::Srff,
        FbsrVariant::Srf => SrVariant::Srf,
        FbsrVariant::Src => SrVariant::Src,
    }
}

fn ties_of(ties: FbsrTies) -> InnerRound {
    match ties {
        FbsrTies::Even => InnerRound::TiesToEven,
        FbsrTies::Odd => InnerRound::TiesToOdd,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fbsr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Create a format from a preset name (`bfloat16`, `binary8p4`,
/// `p3`).
///
/// # Safety
/// `name` must point to a NUL-terminated string and `out` to writable
/// memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn fbsr_format_preset(
    name: *const c_char,
    out: *mut *mut FbsrFormat,
) -> FbsrStatus {
    if name.is_null() || out.is_null() {
        return FbsrStatus::NullArgument;
    }
    let Ok(name) = CStr::from_ptr(name).to_str() else {
        return FbsrStatus::InvalidArgument;
    };
    match FloatFormat::from_name(name) {
        Ok(fmt) => {
            *out = Box::into_raw(Box::new(FbsrFormat(fmt)));
            FbsrStatus::Ok
        }
        Err(err) => status_of(&err),
    }
}

/// Create a custom format from its parameter triple.
///
/// # Safety
/// `out` must point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn fbsr_format_new(
    precision: u32,
    exp_bias: i32,
    max_biased_exp: u32,
    out: *mut *mut FbsrFormat,
) -> FbsrStatus {
    if out.is_null() {
        return FbsrStatus::NullArgument;
    }
    match FloatFormat::new(precision, exp_bias, max_biased_exp) {
        Ok(fmt) => {
            *out = Box::into_raw(Box::new(FbsrFormat(fmt)));
            FbsrStatus::Ok
        }
        Err(err) => status_of(&err),
    }
}

/// Release a format handle. Null is a no-op.
///
/// # Safety
/// `fmt` must be null or a pointer previously returned by a format
/// constructor and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fbsr_format_free(fmt: *mut FbsrFormat) {
    if !fmt.is_null() {
        drop(Box::from_raw(fmt));
    }
}

/// Significand precision in bits (leading bit included).
///
/// # Safety
/// `fmt` must be a live format handle or null; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fbsr_format_precision(
    fmt: *const FbsrFormat,
    out: *mut u32,
) -> FbsrStatus {
    if fmt.is_null() || out.is_null() {
        return FbsrStatus::NullArgument;
    }
    *out = (*fmt).0.precision();
    FbsrStatus::Ok
}

/// Exponent bias.
///
/// # Safety
/// `fmt` must be a live format handle or null; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fbsr_format_exp_bias(
    fmt: *const FbsrFormat,
    out: *mut i32,
) -> FbsrStatus {
    if fmt.is_null() || out.is_null() {
        return FbsrStatus::NullArgument;
    }
    *out = (*fmt).0.exp_bias();
    FbsrStatus::Ok
}

/// Maximum biased exponent.
///
/// # Safety
/// `fmt` must be a live format handle or null; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fbsr_format_max_biased_exp(
    fmt: *const FbsrFormat,
    out: *mut u32,
) -> FbsrStatus {
    if fmt.is_null() || out.is_null() {
        return FbsrStatus::NullArgument;
    }
    *out = (*fmt).0.max_biased_exp();
    FbsrStatus::Ok
}

/// Largest finite value of the format.
///
/// # Safety
/// `fmt` must be a live format handle or null; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fbsr_format_max_finite(
    fmt: *const FbsrFormat,
    out: *mut FbsrDyadic,
) -> FbsrStatus {
    if fmt.is_null() || out.is_null() {
        return FbsrStatus::NullArgument;
    }
    export_dyadic((*fmt).0.max_finite(), out)
}

/// Create a seeded pseudorandom bit source.
#[no_mangle]
pub extern "C" fn fbsr_bitsource_seeded(seed: u64) -> *mut FbsrBitSource {
    Box::into_raw(Box::new(FbsrBitSource(BitSource::seeded(seed))))
}

/// Create the exhaustively cycling counter source (draw k yields
/// k mod 2^bits).
#[no_mangle]
pub extern "C" fn fbsr_bitsource_counter() -> *mut FbsrBitSource {
    Box::into_raw(Box::new(FbsrBitSource(BitSource::counter())))
}

/// Create a source that returns `value` (masked to the drawn width)
/// on every draw.
#[no_mangle]
pub extern "C" fn fbsr_bitsource_fixed(value: u64) -> *mut FbsrBitSource {
    Box::into_raw(Box::new(FbsrBitSource(BitSource::fixed(value))))
}

/// Release a bit-source handle. Null is a no-op.
///
/// # Safety
/// `source` must be null or a pointer previously returned by a
/// bit-source constructor and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fbsr_bitsource_free(source: *mut FbsrBitSource) {
    if !source.is_null() {
        drop(Box::from_raw(source));
    }
}

/// Draw `bits` random bits (1..=32) from the source.
///
/// # Safety
/// `source` must be a live bit-source handle or null; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn fbsr_bitsource_next(
    source: *mut FbsrBitSource,
    bits: u32,
    out: *mut u64,
) -> FbsrStatus {
    if source.is_null() || out.is_null() {
        return FbsrStatus::NullArgument;
    }
    match (*source).0.next_bits(bits) {
        Ok(v) => {
            *out = v;
            FbsrStatus::Ok
        }
        Err(err) => status_of(&err),
    }
}

/// Round `value` into `fmt` under the selected rule.
///
/// `bits` and `ties` are read only by the stochastic modes (`ties`
/// only by the pre-corrected one). `source` may be null for the
/// deterministic modes; the stochastic modes require it. Values beyond
/// the format's range saturate to the largest finite value, matching
/// the library's rounding semantics.
///
/// # Safety
/// `fmt` must be a live format handle or null, `source` null or a live
/// bit-source handle, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fbsr_round(
    value: FbsrDyadic,
    fmt: *const FbsrFormat,
    mode: FbsrMode,
    bits: u32,
    ties: FbsrTies,
    source: *mut FbsrBitSource,
    out: *mut FbsrDyadic,
) -> FbsrStatus {
    if fmt.is_null() || out.is_null() {
        return FbsrStatus::NullArgument;
    }
    let spec = match mode {
        FbsrMode::Ta => RoundingSpec::TiesAway,
        FbsrMode::Tne => RoundingSpec::TiesToEven,
        FbsrMode::Tno => RoundingSpec::TiesToOdd,
        FbsrMode::Srff => RoundingSpec::Srff { bits },
        FbsrMode::Srf => RoundingSpec::Srf { bits },
        FbsrMode::Src => RoundingSpec::Src {
            bits,
            inner: ties_of(ties),
        },
    };
    if let Err(err) = spec.validate() {
        return status_of(&err);
    }
    let mut local = BitSource::fixed(0);
    let drawn: &mut BitSource = if source.is_null() {
        if spec.is_stochastic() {
            return FbsrStatus::NullArgument;
        }
        &mut local
    } else {
        &mut (*source).0
    };
    export_dyadic(round(import_dyadic(value), &(*fmt).0, spec, drawn), out)
}

/// Fractional remainder of `value` against `fmt`, in [0, 1): the
/// distance past the lower rounding candidate in units of the gap.
///
/// # Safety
/// `fmt` must be a live format handle or null; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fbsr_delta(
    value: FbsrDyadic,
    fmt: *const FbsrFormat,
    out: *mut FbsrDyadic,
) -> FbsrStatus {
    if fmt.is_null() || out.is_null() {
        return FbsrStatus::NullArgument;
    }
    match decompose(import_dyadic(value), &(*fmt).0) {
        Ok(d) => export_dyadic(d.delta, out),
        Err(err) => status_of(&err),
    }
}

/// Exact grid-average bias by exhaustive enumeration, in
/// destination-spacing units.
///
/// # Safety
/// `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn fbsr_bias_enumerated(
    variant: FbsrVariant,
    bits: u32,
    excess: u32,
    ties: FbsrTies,
    out: *mut FbsrDyadic,
) -> FbsrStatus {
    if out.is_null() {
        return FbsrStatus::NullArgument;
    }
    match bias_enumerated(variant_of(variant), bits, excess, ties_of(ties)) {
        Ok(result) => export_dyadic(result.value, out),
        Err(err) => status_of(&err),
    }
}

/// Exact grid-average bias via the floor-character sum (fast and
/// offset variants only).
///
/// # Safety
/// `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn fbsr_bias_floor_sum(
    variant: FbsrVariant,
    bits: u32,
    excess: u32,
    out: *mut FbsrDyadic,
) -> FbsrStatus {
    if out.is_null() {
        return FbsrStatus::NullArgument;
    }
    let result = match variant {
        FbsrVariant::Srff => bias_floor_sum_srff(bits, excess),
        FbsrVariant::Srf => bias_floor_sum_srf(bits, excess),
        FbsrVariant::Src => return FbsrStatus::Unsupported,
    };
    match result {
        Ok(result) => export_dyadic(result.value, out),
        Err(err) => status_of(&err),
    }
}

/// Closed-form bias value or bound. `excess` may be null for the
/// infinite-excess-precision limit.
///
/// # Safety
/// `excess` must be null or point to a readable u32; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn fbsr_bias_closed(
    variant: FbsrVariant,
    bits: u32,
    excess: *const u32,
    out: *mut FbsrDyadic,
) -> FbsrStatus {
    if out.is_null() {
        return FbsrStatus::NullArgument;
    }
    let excess = if excess.is_null() { None } else { Some(*excess) };
    match bias_closed(variant_of(variant), bits, excess) {
        Ok(result) => export_dyadic(result.value, out),
        Err(err) => status_of(&err),
    }
}

/// Nearest binary64 value of a dyadic (ties to even, overflow
/// saturates to infinity).
#[no_mangle]
pub extern "C" fn fbsr_dyadic_to_double(value: FbsrDyadic) -> f64 {
    import_dyadic(value).to_f64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::ptr;

    fn dy(numerator: i64, exponent: i32) -> FbsrDyadic {
        FbsrDyadic {
            numerator,
            exponent,
        }
    }

    #[test]
    fn version_is_nul_terminated() {
        let ptr = fbsr_version();
        let s = unsafe { CStr::from_ptr(ptr) }.to_str().unwrap();
        assert_eq!(s, env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn preset_round_trip_and_accessors() {
        unsafe {
            let mut fmt: *mut FbsrFormat = ptr::null_mut();
            let status = fbsr_format_preset(c"binary8p4".as_ptr(), &mut fmt);
            assert_eq!(status, FbsrStatus::Ok);
            let mut precision = 0u32;
            assert_eq!(fbsr_format_precision(fmt, &mut precision), FbsrStatus::Ok);
            assert_eq!(precision, 4);
            let mut bias = 0i32;
            assert_eq!(fbsr_format_exp_bias(fmt, &mut bias), FbsrStatus::Ok);
            assert_eq!(bias, 8);
            let mut emax = 0u32;
            assert_eq!(fbsr_format_max_biased_exp(fmt, &mut emax), FbsrStatus::Ok);
            assert_eq!(emax, 15);
            let mut max = dy(0, 0);
            assert_eq!(fbsr_format_max_finite(fmt, &mut max), FbsrStatus::Ok);
            assert_eq!(max, dy(15, 4)); // 240 = 15 * 2^4
            fbsr_format_free(fmt);
        }
    }

    #[test]
    fn unknown_preset_and_nulls_are_reported() {
        unsafe {
            let mut fmt: *mut FbsrFormat = ptr::null_mut();
            assert_eq!(
                fbsr_format_preset(c"fp64".as_ptr(), &mut fmt),
                FbsrStatus::InvalidArgument
            );
            assert_eq!(
                fbsr_format_preset(ptr::null(), &mut fmt),
                FbsrStatus::NullArgument
            );
            assert_eq!(
                fbsr_format_preset(c"p3".as_ptr(), ptr::null_mut()),
                FbsrStatus::NullArgument
            );
            let mut precision = 0u32;
            assert_eq!(
                fbsr_format_precision(ptr::null(), &mut precision),
                FbsrStatus::NullArgument
            );
            // Invalid parameter triple.
            assert_eq!(
                fbsr_format_new(1, 0, 3, &mut fmt),
                FbsrStatus::InvalidArgument
            );
        }
    }

    #[test]
    fn counter_source_cycles() {
        unsafe {
            let src = fbsr_bitsource_counter();
            let mut drawn = Vec::new();
            for _ in 0..5 {
                let mut v = 0u64;
                assert_eq!(fbsr_bitsource_next(src, 2, &mut v), FbsrStatus::Ok);
                drawn.push(v);
            }
            assert_eq!(drawn, [0, 1, 2, 3, 0]);
            let mut v = 0u64;
            assert_eq!(fbsr_bitsource_next(src, 0, &mut v), FbsrStatus::InvalidArgument);
            assert_eq!(fbsr_bitsource_next(src, 33, &mut v), FbsrStatus::InvalidArgument);
            fbsr_bitsource_free(src);
        }
    }

    #[test]
    fn round_tie_to_even() {
        unsafe {
            let mut fmt: *mut FbsrFormat = ptr::null_mut();
            assert_eq!(
                fbsr_format_preset(c"binary8p4".as_ptr(), &mut fmt),
                FbsrStatus::Ok
            );
            let mut out = dy(0, 0);
            // 1.0625 = 17 * 2^-4 ties down to 1 under even ties.
            let status = fbsr_round(
                dy(17, -4),
                fmt,
                FbsrMode::Tne,
                0,
                FbsrTies::Even,
                ptr::null_mut(),
                &mut out,
            );
            assert_eq!(status, FbsrStatus::Ok);
            assert_eq!(out, dy(1, 0));
            // A stochastic mode without a source is a null-argument
            // error, and with one it works.
            assert_eq!(
                fbsr_round(
                    dy(17, -4),
                    fmt,
                    FbsrMode::Srff,
                    3,
                    FbsrTies::Even,
                    ptr::null_mut(),
                    &mut out
                ),
                FbsrStatus::NullArgument
            );
            let src = fbsr_bitsource_fixed(0);
            assert_eq!(
                fbsr_round(dy(17, -4), fmt, FbsrMode::Srff, 3, FbsrTies::Even, src, &mut out),
                FbsrStatus::Ok
            );
            assert_eq!(out, dy(1, 0)); // delta 1/2 + 0/8 < 1: stays
            assert_eq!(
                fbsr_round(dy(17, -4), fmt, FbsrMode::Srff, 99, FbsrTies::Even, src, &mut out),
                FbsrStatus::InvalidArgument
            );
            fbsr_bitsource_free(src);
            fbsr_format_free(fmt);
        }
    }

    #[test]
    fn delta_matches_decomposition() {
        unsafe {
            let mut fmt: *mut FbsrFormat = ptr::null_mut();
            assert_eq!(
                fbsr_format_preset(c"binary8p4".as_ptr(), &mut fmt),
                FbsrStatus::Ok
            );
            let mut delta = dy(0, 0);
            assert_eq!(fbsr_delta(dy(17, -4), fmt, &mut delta), FbsrStatus::Ok);
            assert_eq!(delta, dy(1, -1));
            assert_eq!(
                fbsr_delta(dy(0, 0), fmt, &mut delta),
                FbsrStatus::InvalidArgument
            );
            fbsr_format_free(fmt);
        }
    }

    #[test]
    fn bias_values_cross_the_boundary() {
        unsafe {
            let mut out = dy(0, 0);
            assert_eq!(
                fbsr_bias_enumerated(FbsrVariant::Srff, 3, 5, FbsrTies::Even, &mut out),
                FbsrStatus::Ok
            );
            assert_eq!(out, dy(-3, -6));
            assert_eq!(
                fbsr_bias_floor_sum(FbsrVariant::Srf, 3, 5, &mut out),
                FbsrStatus::Ok
            );
            assert_eq!(out, dy(1, -6));
            assert_eq!(
                fbsr_bias_floor_sum(FbsrVariant::Src, 3, 5, &mut out),
                FbsrStatus::Unsupported
            );
            // Infinite-limit closed form via a null excess pointer.
            assert_eq!(
                fbsr_bias_closed(FbsrVariant::Srff, 2, ptr::null(), &mut out),
                FbsrStatus::Ok
            );
            assert_eq!(out, dy(-1, -3));
            let excess = 5u32;
            assert_eq!(
                fbsr_bias_closed(FbsrVariant::Srf, 3, &excess, &mut out),
                FbsrStatus::Ok
            );
            assert_eq!(out, dy(1, -6));
            assert_eq!(
                fbsr_bias_closed(FbsrVariant::Src, 3, &excess, &mut out),
                FbsrStatus::Unsupported
            );
            // Oversized enumeration requests are rejected, not hung.
            assert_eq!(
                fbsr_bias_enumerated(FbsrVariant::Srff, 16, 16, FbsrTies::Even, &mut out),
                FbsrStatus::Unsupported
            );
        }
    }

    #[test]
    fn doubles_are_nearest_values() {
        assert_eq!(fbsr_dyadic_to_double(dy(-3, -6)), -0.046875);
        assert_eq!(fbsr_dyadic_to_double(dy(1, 0)), 1.0);
        assert_eq!(fbsr_dyadic_to_double(dy(0, 0)), 0.0);
    }
}
