//! Value decomposition and rounding predicates.
//!
//! Rounding a value `x` into a format splits `|x|` into an unbiased
//! exponent `e`, an integer floor-significand `s = floor(sig)`, and an
//! exact fractional remainder `delta` in `[0, 1)`:
//!
//! ```text
//! |x| = (s + delta) * 2^(e - (P-1)),   e = max(floor(log2 |x|), 1-B)
//! ```
//!
//! A predicate then decides whether to keep `s` or advance to `s + 1`
//! (carrying into the exponent at a binade boundary). Deterministic
//! predicates resolve ties at `delta = 1/2`; the stochastic predicates
//! consume an N-bit draw `n` and compare in exact arithmetic:
//!
//! * fast-and-loose (`Srff`): round up iff `delta + n*2^-N >= 1`
//! * offset (`Srf`): round up iff `delta + (n + 1/2)*2^-N >= 1`
//! * corrected (`Src`): pre-round `delta` to the N-bit grid with a
//!   deterministic nearest/ties rule, then apply the fast predicate;
//!   if the pre-round reaches 1 the round-up is already committed.
//!
//! Negative values round by sign-magnitude; out-of-range magnitudes
//! saturate deterministically to the largest finite value.

use crate::dyadic::Dyadic;
use crate::error::Error;
use crate::formats::FloatFormat;
use crate::randbits::{BitSource, MAX_BITS};

/// Tie rule for deterministic rounding-to-nearest steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerRound {
    TiesToEven,
    TiesToOdd,
}

/// Which rounding rule to apply, with the random-bit count for the
/// stochastic variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RoundingSpec {
    /// Nearest, ties away from zero.
    TiesAway,
    /// Nearest, ties to even significand.
    TiesToEven,
    /// Nearest, ties to odd significand.
    TiesToOdd,
    /// Few-bit stochastic rounding, fast-and-loose form.
    Srff { bits: u32 },
    /// Few-bit stochastic rounding, offset form.
    Srf { bits: u32 },
    /// Few-bit stochastic rounding with deterministic pre-correction.
    Src { bits: u32, inner: InnerRound },
}

impl RoundingSpec {
    /// Random bits consumed per rounding, when stochastic.
    pub fn random_bits(&self) -> Option<u32> {
        match *self {
            RoundingSpec::Srff { bits }
            | RoundingSpec::Srf { bits }
            | RoundingSpec::Src { bits, .. } => Some(bits),
            _ => None,
        }
    }

    pub fn is_stochastic(&self) -> bool {
        self.random_bits().is_some()
    }

    /// Check the bit-count range for stochastic modes.
    pub fn validate(&self) -> Result<(), Error> {
        match self.random_bits() {
            Some(bits) if bits == 0 || bits > MAX_BITS => Err(Error::BitCount(bits)),
            _ => Ok(()),
        }
    }

    /// Short lowercase name, as used on the CLI and in CSV preambles.
    pub fn name(&self) -> &'static str {
        match self {
            RoundingSpec::TiesAway => "ta",
            RoundingSpec::TiesToEven => "tne",
            RoundingSpec::TiesToOdd => "tno",
            RoundingSpec::Srff { .. } => "srff",
            RoundingSpec::Srf { .. } => "srf",
            RoundingSpec::Src { .. } => "src",
        }
    }
}

/// Sign-magnitude split of a value against a format: the unbiased
/// exponent after the subnormal clamp, the integer part of the scaled
/// significand, and the exact fractional remainder.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub sign: bool,
    pub exponent: i32,
    pub floor_significand: u64,
    pub delta: Dyadic,
}

/// Split a nonzero in-range value. The reconstruction identity
/// `(-1)^sign * (floor_significand + delta) * 2^(exponent - (P-1))`
/// recovers the input exactly.
pub fn decompose(x: Dyadic, fmt: &FloatFormat) -> Result<Decomposition, Error> {
    if x.is_zero() {
        return Err(Error::DecomposeZero);
    }
    let magnitude = x.abs();
    let limit = fmt.max_finite();
    if magnitude > limit {
        return Err(Error::OutOfRange {
            value: x.to_decimal_string(),
            max: limit.to_decimal_string(),
        });
    }
    let exponent = magnitude.floor_log2().max(fmt.min_exponent());
    let scaled = magnitude.shifted(fmt.precision() as i32 - 1 - exponent);
    Ok(Decomposition {
        sign: x.is_negative(),
        exponent,
        floor_significand: scaled.floor() as u64,
        delta: scaled.frac(),
    })
}

/// Nearest, ties away from zero: up iff `delta >= 1/2`.
pub fn pred_ta(delta: Dyadic) -> bool {
    delta >= Dyadic::new(1, -1)
}

/// Nearest, ties to even: up iff `delta > 1/2`, or `delta = 1/2` and
/// the up-candidate `floor_significand + 1` is even.
pub fn pred_tne(floor_significand: u64, delta: Dyadic) -> bool {
    match delta.cmp(&Dyadic::new(1, -1)) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => floor_significand % 2 == 1,
    }
}

/// Nearest, ties to odd: the even test inverted at the tie.
pub fn pred_tno(floor_significand: u64, delta: Dyadic) -> bool {
    match delta.cmp(&Dyadic::new(1, -1)) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => floor_significand.is_multiple_of(2),
    }
}

/// Fast-and-loose stochastic predicate: up iff `delta + n*2^-N >= 1`,
/// evaluated exactly as `delta >= (2^N - n) * 2^-N`.
pub fn pred_srff(delta: Dyadic, noise: u64, bits: u32) -> bool {
    debug_assert!((1..=MAX_BITS).contains(&bits));
    debug_assert!(noise < (1u64 << bits));
    delta >= Dyadic::new((1i128 << bits) - noise as i128, -(bits as i32))
}

/// Offset stochastic predicate: up iff `delta + (n + 1/2)*2^-N >= 1`,
/// evaluated exactly as `delta >= (2^(N+1) - 2n - 1) * 2^-(N+1)`.
pub fn pred_srf(delta: Dyadic, noise: u64, bits: u32) -> bool {
    debug_assert!((1..=MAX_BITS).contains(&bits));
    debug_assert!(noise < (1u64 << bits));
    delta
        >= Dyadic::new(
            (1i128 << (bits + 1)) - 2 * noise as i128 - 1,
            -(bits as i32) - 1,
        )
}

/// Corrected stochastic predicate: deterministically round `delta` to
/// the N-bit grid (nearest, ties per `inner`), then apply the fast
/// predicate. A pre-round that reaches 1 commits the round-up for
/// every draw.
pub fn pred_src(delta: Dyadic, noise: u64, bits: u32, inner: InnerRound) -> bool {
    let pre = round_to_int_ties(delta.shifted(bits as i32), inner);
    if pre >= 1i128 << bits {
        return true;
    }
    pred_srff(Dyadic::new(pre, -(bits as i32)), noise, bits)
}

/// Round an exact value to the nearest integer, resolving halfway
/// cases by the given tie rule.
pub fn round_to_int_ties(x: Dyadic, ties: InnerRound) -> i128 {
    let fl = x.floor();
    match x.frac().cmp(&Dyadic::new(1, -1)) {
        std::cmp::Ordering::Less => fl,
        std::cmp::Ordering::Greater => fl + 1,
        std::cmp::Ordering::Equal => match ties {
            InnerRound::TiesToEven => {
                if fl % 2 == 0 {
                    fl
                } else {
                    fl + 1
                }
            }
            InnerRound::TiesToOdd => {
                if fl % 2 == 0 {
                    fl + 1
                } else {
                    fl
                }
            }
        },
    }
}

/// Round `x` to `precision` significant bits (unbounded exponent),
/// nearest with the given tie rule. Used for modeling intermediate
/// arithmetic carried at a fixed precision.
pub fn quantize_significand(x: Dyadic, precision: u32, ties: InnerRound) -> Dyadic {
    assert!(precision >= 1, "precision must be at least 1");
    if x.is_zero() {
        return x;
    }
    let shift = precision as i32 - 1 - x.floor_log2();
    let m = round_to_int_ties(x.shifted(shift), ties);
    Dyadic::new(m, -shift)
}

/// Round a finite value into the format under the given rule.
///
/// Total: zero returns zero, out-of-range magnitudes saturate to the
/// largest finite value with the input's sign, representable inputs
/// return unchanged (consuming no random bits), and negative values
/// round by sign-magnitude. Stochastic modes consume exactly one
/// N-bit draw per inexact rounding.
pub fn round(x: Dyadic, fmt: &FloatFormat, spec: RoundingSpec, source: &mut BitSource) -> Dyadic {
    spec.validate().expect("rounding spec validated by caller");
    if x.is_zero() {
        return Dyadic::ZERO;
    }
    let limit = fmt.max_finite();
    if x.abs() > limit {
        return if x.is_negative() { -limit } else { limit };
    }
    let d = decompose(x, fmt).expect("nonzero in-range value decomposes");
    if d.delta.is_zero() {
        return x;
    }
    let up = match spec {
        RoundingSpec::TiesAway => pred_ta(d.delta),
        RoundingSpec::TiesToEven => pred_tne(d.floor_significand, d.delta),
        RoundingSpec::TiesToOdd => pred_tno(d.floor_significand, d.delta),
        RoundingSpec::Srff { bits } => {
            let n = source.next_bits(bits).expect("validated bit count");
            pred_srff(d.delta, n, bits)
        }
        RoundingSpec::Srf { bits } => {
            let n = source.next_bits(bits).expect("validated bit count");
            pred_srf(d.delta, n, bits)
        }
        RoundingSpec::Src { bits, inner } => {
            let n = source.next_bits(bits).expect("validated bit count");
            pred_src(d.delta, n, bits, inner)
        }
    };
    let mut significand = d.floor_significand as i128 + i128::from(up);
    let mut exponent = d.exponent;
    if significand == 1i128 << fmt.precision() {
        // The significand overflowed the binade: 2^P * 2^(e-P+1) is
        // 2^(P-1) * 2^(e+1-P+1), the first value of the next binade.
        significand >>= 1;
        exponent += 1;
        debug_assert!(exponent <= fmt.max_exponent());
    }
    let value = Dyadic::new(significand, exponent - (fmt.precision() as i32 - 1));
    if d.sign {
        -value
    } else {
        value
    }
}
