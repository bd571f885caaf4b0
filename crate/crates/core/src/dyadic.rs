//! Exact dyadic rational arithmetic.
//!
//! A [`Dyadic`] is a number of the form `m * 2^e` with `m: i128` and
//! `e: i32`, kept in canonical form (`m` odd, or `m == 0 && e == 0`).
//! Every finite binary floating-point value of any precision up to 128
//! significant bits is representable exactly, so rounding decisions and
//! bias accumulations made with this type are free of intermediate
//! rounding error.
//!
//! Operations that would need more than 128 mantissa bits panic with a
//! capacity message instead of silently losing precision. The library
//! only ever mixes values whose exponents are within a format's dynamic
//! range of each other, so the capacity is never reached in practice.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;

/// Largest bit length a mantissa may reach during alignment.
const MANTISSA_CAPACITY: u32 = 127;

/// An exact dyadic rational `m * 2^e`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: i128,
    exp: i32,
}

/// Bit length of the magnitude of `m` (0 for `m == 0`).
fn bit_len(m: i128) -> u32 {
    128 - m.unsigned_abs().leading_zeros()
}

/// Shift `m` left by `s`, panicking if the result would not fit.
fn shl_checked(m: i128, s: u32) -> i128 {
    if s == 0 {
        return m;
    }
    assert!(
        bit_len(m) + s <= MANTISSA_CAPACITY,
        "dyadic mantissa capacity exceeded: {} bits shifted by {}",
        bit_len(m),
        s
    );
    m << s
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { num: 0, exp: 0 };
    pub const ONE: Dyadic = Dyadic { num: 1, exp: 0 };

    /// Build `num * 2^exp`, normalizing to canonical form.
    pub fn new(num: i128, exp: i32) -> Dyadic {
        if num == 0 {
            return Dyadic::ZERO;
        }
        let tz = num.trailing_zeros();
        Dyadic {
            num: num >> tz,
            exp: exp
                .checked_add(tz as i32)
                .expect("dyadic exponent overflow"),
        }
    }

    /// Exactly `2^exp`.
    pub fn pow2(exp: i32) -> Dyadic {
        Dyadic { num: 1, exp }
    }

    pub fn from_int(v: i64) -> Dyadic {
        Dyadic::new(v as i128, 0)
    }

    /// Exact conversion from a finite `f64`. Returns `None` for NaN or
    /// infinities.
    pub fn from_f64(x: f64) -> Option<Dyadic> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Dyadic::ZERO);
        }
        let bits = x.to_bits();
        let negative = bits >> 63 != 0;
        let biased = ((bits >> 52) & 0x7ff) as i32;
        let frac = (bits & ((1u64 << 52) - 1)) as i128;
        let (m, e) = if biased == 0 {
            (frac, -1074)
        } else {
            (frac | (1 << 52), biased - 1075)
        };
        Some(Dyadic::new(if negative { -m } else { m }, e))
    }

    /// Nearest `f64` (ties to even). Values beyond the `f64` range
    /// become infinities; tiny values may lose low bits in the
    /// subnormal range. Use [`Dyadic::to_f64_exact`] when the
    /// conversion must be lossless.
    pub fn to_f64(self) -> f64 {
        if self.num == 0 {
            return 0.0;
        }
        let bl = bit_len(self.num);
        // Reduce to at most 53 significant bits, rounding half to even.
        let (m, e) = if bl > 53 {
            let drop = bl - 53;
            let kept = self.num >> drop;
            let rem = self.num & ((1i128 << drop) - 1);
            let half = 1i128 << (drop - 1);
            // Remainder of an arithmetic shift is non-negative, so the
            // same tie test serves both signs (floor + carry == nearest
            // for the two's-complement split below).
            let carry = match rem.cmp(&half) {
                Ordering::Less => 0,
                Ordering::Greater => 1,
                Ordering::Equal => kept & 1,
            };
            (kept + carry, self.exp + drop as i32)
        } else {
            (self.num, self.exp)
        };
        // `m` has at most 54 bits (53 + possible carry), exact in f64.
        let scaled = m as f64;
        // Split the scale so each factor stays finite and a power of
        // two; multiplying by a power of two is exact until the final
        // step over/underflows, which is the correct saturation.
        let (e1, e2) = if e > 1023 {
            (1023, e - 1023)
        } else if e < -1021 {
            (-1021, e + 1021)
        } else {
            (e, 0)
        };
        scaled * 2f64.powi(e1) * 2f64.powi(e2.clamp(-2000, 2000))
    }

    /// Conversion to `f64` only when it is exact.
    pub fn to_f64_exact(self) -> Option<f64> {
        let x = self.to_f64();
        if Dyadic::from_f64(x) == Some(self) {
            Some(x)
        } else {
            None
        }
    }

    /// Canonical numerator: odd, or zero for the zero value.
    pub fn numerator(self) -> i128 {
        self.num
    }

    /// Canonical exponent of two (zero for the zero value).
    pub fn exponent(self) -> i32 {
        self.exp
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    pub fn is_negative(self) -> bool {
        self.num < 0
    }

    /// -1, 0, or 1.
    pub fn signum(self) -> i32 {
        self.num.signum() as i32
    }

    pub fn abs(self) -> Dyadic {
        Dyadic {
            num: self.num.abs(),
            exp: if self.num == 0 { 0 } else { self.exp },
        }
    }

    /// Multiply by `2^k` (exact).
    pub fn shifted(self, k: i32) -> Dyadic {
        if self.num == 0 {
            return Dyadic::ZERO;
        }
        Dyadic {
            num: self.num,
            exp: self.exp.checked_add(k).expect("dyadic exponent overflow"),
        }
    }

    /// True when the value is an integer.
    pub fn is_integer(self) -> bool {
        self.num == 0 || self.exp >= 0
    }

    /// Floor of the base-2 logarithm of `|self|`. Panics on zero.
    pub fn floor_log2(self) -> i32 {
        assert!(self.num != 0, "floor_log2 of zero");
        self.exp + bit_len(self.num) as i32 - 1
    }

    /// Largest integer not above the value. Panics if the integer part
    /// needs more than 128 bits.
    pub fn floor(self) -> i128 {
        if self.num == 0 {
            return 0;
        }
        if self.exp >= 0 {
            shl_checked(self.num, self.exp as u32)
        } else {
            let k = (-(self.exp as i64)).min(127) as u32;
            // Arithmetic shift rounds toward negative infinity, which
            // is exactly floor; k >= 128 bits of fraction means the
            // magnitude is below 1, which the clamp to 127 preserves.
            self.num >> k
        }
    }

    /// Fractional part `self - floor(self)`, always in `[0, 1)`.
    pub fn frac(self) -> Dyadic {
        if self.num == 0 || self.exp >= 0 {
            return Dyadic::ZERO;
        }
        let k = -(self.exp as i64);
        if k > 127 {
            // |self| < 2^-1, so the fractional part is the value itself
            // (non-negative) or 1 + self (negative). The latter would
            // need a mantissa wider than the capacity, and no caller
            // feeds negatives this small, so reject loudly.
            if self.num > 0 {
                return self;
            }
            panic!("dyadic mantissa capacity exceeded in frac()");
        }
        let k = k as u32;
        let rem = self.num.rem_euclid(1i128 << k);
        Dyadic::new(rem, self.exp)
    }

    /// Exact decimal representation, e.g. `-0.046875`.
    pub fn to_decimal_string(self) -> String {
        if self.num == 0 {
            return "0".to_string();
        }
        let sign = if self.num < 0 { "-" } else { "" };
        let mag = BigInt::from(self.num.unsigned_abs());
        if self.exp >= 0 {
            return format!("{sign}{}", mag << self.exp as usize);
        }
        // m / 2^k == m * 5^k / 10^k: scale to an integer, then place
        // the decimal point k digits from the right.
        let k = (-self.exp) as usize;
        let scaled = mag * BigInt::from(5u8).pow(k as u32);
        let mut digits = scaled.to_string();
        if digits.len() <= k {
            digits = format!("{}{}", "0".repeat(k + 1 - digits.len()), digits);
        }
        let point = digits.len() - k;
        format!("{sign}{}.{}", &digits[..point], &digits[point..])
    }

    /// Reduced-fraction representation: plain digits when the value
    /// is an integer, otherwise `p/q` with `q` a power of two, e.g.
    /// `-3/64`.
    pub fn to_fraction_string(self) -> String {
        if self.exp >= 0 {
            return self.to_decimal_string();
        }
        let denom = BigInt::from(1u8) << (-self.exp) as usize;
        format!("{}/{}", self.num, denom)
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Dyadic) -> Ordering {
        let sa = self.num.signum();
        let sb = other.num.signum();
        if sa != sb {
            return sa.cmp(&sb);
        }
        if sa == 0 {
            return Ordering::Equal;
        }
        // Same nonzero sign: compare magnitudes by position of the most
        // significant bit first, which avoids any wide shifts.
        let pa = self.exp as i64 + bit_len(self.num) as i64;
        let pb = other.exp as i64 + bit_len(other.num) as i64;
        if pa != pb {
            let mag = pa.cmp(&pb);
            return if sa > 0 { mag } else { mag.reverse() };
        }
        // Equal msb position: aligning the larger exponent down to the
        // smaller one grows its mantissa to exactly the other's bit
        // length, which fits by construction.
        let (ma, mb) = if self.exp >= other.exp {
            (self.num << (self.exp - other.exp) as u32, other.num)
        } else {
            (self.num, other.num << (other.exp - self.exp) as u32)
        };
        ma.cmp(&mb)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Dyadic) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        if self.num == 0 {
            return rhs;
        }
        if rhs.num == 0 {
            return self;
        }
        let e = self.exp.min(rhs.exp);
        let ma = shl_checked(self.num, (self.exp - e) as u32);
        let mb = shl_checked(rhs.num, (rhs.exp - e) as u32);
        let m = ma
            .checked_add(mb)
            .expect("dyadic mantissa capacity exceeded in add");
        Dyadic::new(m, e)
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        self + (-rhs)
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            num: -self.num,
            exp: self.exp,
        }
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: Dyadic) -> Dyadic {
        if self.num == 0 || rhs.num == 0 {
            return Dyadic::ZERO;
        }
        let m = self
            .num
            .checked_mul(rhs.num)
            .expect("dyadic mantissa capacity exceeded in mul");
        Dyadic::new(
            m,
            self.exp
                .checked_add(rhs.exp)
                .expect("dyadic exponent overflow"),
        )
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}
