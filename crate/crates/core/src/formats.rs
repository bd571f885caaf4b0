//! Parameterized binary floating-point formats.
//!
//! A format is the triple (precision `P`, exponent bias `B`, largest
//! biased exponent `emax`). Its value set contains subnormals (biased
//! exponent 0), normals, and a single zero — no NaNs or infinities.
//! The largest finite value is `M = (2 - 2^(1-P)) * 2^(emax-B)`.
//!
//! All values are exact [`Dyadic`] rationals; encoding is lossless or
//! it is an error.

use crate::dyadic::Dyadic;
use crate::error::Error;

/// Guard for [`FloatFormat::enumerate_finite`]: `P-1 + bits(emax)` may
/// not exceed this.
const ENUMERATION_BITS_LIMIT: u32 = 24;

/// Caps that keep exponent arithmetic comfortably inside `i32`.
const MAX_PRECISION: u32 = 53;
const MAX_EXP_MAGNITUDE: i64 = 1_000_000;

/// A binary floating-point format: precision, exponent bias, and the
/// largest biased exponent available for finite values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FloatFormat {
    precision: u32,
    exp_bias: i32,
    max_biased_exp: u32,
}

/// A sign/exponent/trailing-significand triple in some format.
///
/// `biased_exponent == 0` encodes subnormals (zero when `trailing` is
/// also 0); the canonical zero has `sign == false`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct UnpackedFloat {
    pub sign: bool,
    pub biased_exponent: u32,
    pub trailing: u64,
}

impl UnpackedFloat {
    pub const ZERO: UnpackedFloat = UnpackedFloat {
        sign: false,
        biased_exponent: 0,
        trailing: 0,
    };
}

impl FloatFormat {
    /// Build a format, validating the parameters.
    pub fn new(precision: u32, exp_bias: i32, max_biased_exp: u32) -> Result<FloatFormat, Error> {
        if !(2..=MAX_PRECISION).contains(&precision) {
            return Err(Error::InvalidFormat(format!(
                "precision {precision} outside 2..={MAX_PRECISION}"
            )));
        }
        if max_biased_exp < 1 {
            return Err(Error::InvalidFormat(
                "largest biased exponent must be at least 1".into(),
            ));
        }
        if i64::from(max_biased_exp) > MAX_EXP_MAGNITUDE
            || i64::from(exp_bias).abs() > MAX_EXP_MAGNITUDE
        {
            return Err(Error::InvalidFormat(format!(
                "exponent parameters exceed +/-{MAX_EXP_MAGNITUDE}"
            )));
        }
        Ok(FloatFormat {
            precision,
            exp_bias,
            max_biased_exp,
        })
    }

    /// BFloat16: P=8, B=127, emax=254.
    pub fn bfloat16() -> FloatFormat {
        FloatFormat {
            precision: 8,
            exp_bias: 127,
            max_biased_exp: 254,
        }
    }

    /// An 8-bit format with a 4-bit significand: P=4, B=8, emax=15.
    pub fn binary8p4() -> FloatFormat {
        FloatFormat {
            precision: 4,
            exp_bias: 8,
            max_biased_exp: 15,
        }
    }

    /// A precision-3 8-bit format (E5M2 analogue): P=3, B=15, emax=30.
    pub fn p3() -> FloatFormat {
        FloatFormat {
            precision: 3,
            exp_bias: 15,
            max_biased_exp: 30,
        }
    }

    /// Preset names accepted by [`FloatFormat::from_name`].
    pub fn preset_names() -> [&'static str; 3] {
        ["bfloat16", "binary8p4", "p3"]
    }

    /// Look up a preset by (case-insensitive) name.
    pub fn from_name(name: &str) -> Result<FloatFormat, Error> {
        match name.to_ascii_lowercase().as_str() {
            "bfloat16" => Ok(FloatFormat::bfloat16()),
            "binary8p4" => Ok(FloatFormat::binary8p4()),
            "p3" => Ok(FloatFormat::p3()),
            _ => Err(Error::UnknownPreset(name.to_string())),
        }
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn exp_bias(&self) -> i32 {
        self.exp_bias
    }

    pub fn max_biased_exp(&self) -> u32 {
        self.max_biased_exp
    }

    /// Number of trailing-significand values, `2^(P-1)`.
    pub fn trailing_count(&self) -> u64 {
        1u64 << (self.precision - 1)
    }

    /// Smallest unbiased exponent, `1 - B`; shared by subnormals and
    /// the lowest normal binade.
    pub fn min_exponent(&self) -> i32 {
        1 - self.exp_bias
    }

    /// Largest unbiased exponent, `emax - B`.
    pub fn max_exponent(&self) -> i32 {
        self.max_biased_exp as i32 - self.exp_bias
    }

    /// Value spacing for significands scaled by the unbiased exponent
    /// `e`: `2^(e - (P-1))`.
    pub fn ulp_at_exponent(&self, e: i32) -> Dyadic {
        Dyadic::pow2(e - (self.precision as i32 - 1))
    }

    /// Largest finite value `M = (2 - 2^(1-P)) * 2^(emax-B)`.
    pub fn max_finite(&self) -> Dyadic {
        let p = self.precision as i32;
        Dyadic::new((1i128 << p) - 1, self.max_exponent() - (p - 1))
    }

    /// Smallest positive value (the least subnormal), `2^(2-P-B)`.
    pub fn min_positive(&self) -> Dyadic {
        self.ulp_at_exponent(self.min_exponent())
    }

    /// True when `u` is a valid encoding in this format. The canonical
    /// zero is unsigned, so `(sign, 0, 0)` with `sign` set is invalid.
    pub fn is_valid(&self, u: UnpackedFloat) -> bool {
        u.biased_exponent <= self.max_biased_exp
            && u.trailing < self.trailing_count()
            && !(u.sign && u.biased_exponent == 0 && u.trailing == 0)
    }

    /// Exact value of an encoding:
    /// `(-1)^s * (lead + t*2^(1-P)) * 2^(e_eff - B)` where the leading
    /// bit is 0 for subnormals (`e = 0`, effective exponent 1) and 1
    /// otherwise.
    pub fn decode(&self, u: UnpackedFloat) -> Dyadic {
        assert!(self.is_valid(u), "encoding outside format: {u:?}");
        let p = self.precision as i32;
        let (lead, e_eff) = if u.biased_exponent == 0 {
            (0i128, 1i32)
        } else {
            (1i128 << (p - 1), u.biased_exponent as i32)
        };
        let significand = lead + u.trailing as i128;
        let value = Dyadic::new(significand, e_eff - self.exp_bias - (p - 1));
        if u.sign {
            -value
        } else {
            value
        }
    }

    /// Exact encoding of a value; errors when the value is not a
    /// member of the format's finite set.
    pub fn encode(&self, x: Dyadic) -> Result<UnpackedFloat, Error> {
        if x.is_zero() {
            return Ok(UnpackedFloat::ZERO);
        }
        let magnitude = x.abs();
        if magnitude > self.max_finite() {
            return Err(Error::OutOfRange {
                value: x.to_decimal_string(),
                max: self.max_finite().to_decimal_string(),
            });
        }
        let p = self.precision as i32;
        let e = magnitude.floor_log2().max(self.min_exponent());
        let scaled = magnitude.shifted(p - 1 - e);
        if !scaled.is_integer() {
            return Err(Error::NotRepresentable(x.to_decimal_string()));
        }
        let m = scaled.floor() as u64;
        let half = self.trailing_count();
        let (biased, trailing) = if m >= half {
            ((e + self.exp_bias) as u32, m - half)
        } else {
            // Below the leading bit the value must sit in the subnormal
            // binade; a smaller-exponent normal would have been scaled
            // to at least `half` above.
            (0, m)
        };
        Ok(UnpackedFloat {
            sign: x.is_negative(),
            biased_exponent: biased,
            trailing,
        })
    }

    /// The least representable value strictly greater than `decode(u)`;
    /// errors on the largest finite value.
    pub fn succ(&self, u: UnpackedFloat) -> Result<UnpackedFloat, Error> {
        assert!(self.is_valid(u), "encoding outside format: {u:?}");
        let t_max = self.trailing_count() - 1;
        if u.sign {
            // Negative values step toward zero: decrement the magnitude.
            let next = if u.trailing > 0 {
                UnpackedFloat {
                    sign: true,
                    biased_exponent: u.biased_exponent,
                    trailing: u.trailing - 1,
                }
            } else {
                UnpackedFloat {
                    sign: true,
                    biased_exponent: u.biased_exponent - 1,
                    trailing: t_max,
                }
            };
            if next.biased_exponent == 0 && next.trailing == 0 {
                return Ok(UnpackedFloat::ZERO);
            }
            return Ok(next);
        }
        if u.biased_exponent == self.max_biased_exp && u.trailing == t_max {
            return Err(Error::NoSuccessor);
        }
        if u.trailing < t_max {
            Ok(UnpackedFloat {
                sign: false,
                biased_exponent: u.biased_exponent,
                trailing: u.trailing + 1,
            })
        } else {
            Ok(UnpackedFloat {
                sign: false,
                biased_exponent: u.biased_exponent + 1,
                trailing: 0,
            })
        }
    }

    /// All finite values in strictly increasing order, from `-M` to
    /// `M` with a single zero. Guarded against formats too large to
    /// materialize.
    pub fn enumerate_finite(&self) -> Result<Vec<Dyadic>, Error> {
        let exp_bits = 32 - self.max_biased_exp.leading_zeros();
        let total_bits = (self.precision - 1) + exp_bits;
        if total_bits > ENUMERATION_BITS_LIMIT {
            return Err(Error::EnumerationTooLarge(total_bits));
        }
        let mut positives = Vec::new();
        for e in 0..=self.max_biased_exp {
            let t_start = u64::from(e == 0);
            for t in t_start..self.trailing_count() {
                positives.push(self.decode(UnpackedFloat {
                    sign: false,
                    biased_exponent: e,
                    trailing: t,
                }));
            }
        }
        let mut out = Vec::with_capacity(2 * positives.len() + 1);
        out.extend(positives.iter().rev().map(|&v| -v));
        out.push(Dyadic::ZERO);
        out.extend(positives.iter().copied());
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Small formats used by the enumeration oracles.
    fn oracle_formats() -> Vec<FloatFormat> {
        vec![
            FloatFormat::new(2, 1, 1).unwrap(),
            FloatFormat::new(2, 3, 6).unwrap(),
            FloatFormat::new(3, 3, 6).unwrap(),
            FloatFormat::new(4, 7, 14).unwrap(),
            FloatFormat::new(4, 8, 15).unwrap(),
            FloatFormat::new(3, 15, 30).unwrap(),
            FloatFormat::new(5, 0, 9).unwrap(),
        ]
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(FloatFormat::new(1, 0, 1).is_err());
        assert!(FloatFormat::new(54, 0, 1).is_err());
        assert!(FloatFormat::new(4, 0, 0).is_err());
        assert!(FloatFormat::new(4, 2_000_000, 1).is_err());
        assert!(FloatFormat::new(4, 0, 2_000_000).is_err());
    }

    #[test]
    fn presets_have_expected_shapes() {
        let bf = FloatFormat::bfloat16();
        assert_eq!(
            (bf.precision(), bf.exp_bias(), bf.max_biased_exp()),
            (8, 127, 254)
        );
        // (2 - 2^-7) * 2^127 = 255 * 2^120
        assert_eq!(bf.max_finite(), Dyadic::new(255, 120));

        let b8 = FloatFormat::binary8p4();
        assert_eq!(
            (b8.precision(), b8.exp_bias(), b8.max_biased_exp()),
            (4, 8, 15)
        );
        assert_eq!(b8.max_finite(), Dyadic::from_int(240));

        let p3 = FloatFormat::p3();
        assert_eq!(
            (p3.precision(), p3.exp_bias(), p3.max_biased_exp()),
            (3, 15, 30)
        );
        assert_eq!(p3.max_finite(), Dyadic::from_int(57344));
    }

    #[test]
    fn preset_lookup_by_name() {
        assert_eq!(
            FloatFormat::from_name("BFloat16").unwrap(),
            FloatFormat::bfloat16()
        );
        assert_eq!(
            FloatFormat::from_name("binary8p4").unwrap(),
            FloatFormat::binary8p4()
        );
        assert_eq!(FloatFormat::from_name("p3").unwrap(), FloatFormat::p3());
        assert!(matches!(
            FloatFormat::from_name("fp8"),
            Err(Error::UnknownPreset(_))
        ));
    }

    #[test]
    fn decode_unit_subnormal_and_negative() {
        // (s=0, e=B, t=0) decodes to exactly 1 in any format.
        for fmt in oracle_formats() {
            if fmt.exp_bias() >= 1 && fmt.exp_bias() <= fmt.max_biased_exp() as i32 {
                let one = fmt.decode(UnpackedFloat {
                    sign: false,
                    biased_exponent: fmt.exp_bias() as u32,
                    trailing: 0,
                });
                assert_eq!(one, Dyadic::ONE, "format {fmt:?}");
            }
        }
        // Subnormal branch: (s=0, e=0, t=1) with P=4, B=8 is 2^-3 * 2^-7.
        let b8 = FloatFormat::binary8p4();
        assert_eq!(
            b8.decode(UnpackedFloat {
                sign: false,
                biased_exponent: 0,
                trailing: 1
            }),
            Dyadic::pow2(-10)
        );
        // Normal branch with sign: (s=1, e=B+1, t=2^(P-2)) with P=4 is -1.5*2 = -3.
        assert_eq!(
            b8.decode(UnpackedFloat {
                sign: true,
                biased_exponent: 9,
                trailing: 4
            }),
            Dyadic::from_int(-3)
        );
    }

    #[test]
    fn max_finite_matches_enumeration_oracle() {
        for fmt in oracle_formats() {
            let all = fmt.enumerate_finite().unwrap();
            assert_eq!(fmt.max_finite(), *all.last().unwrap(), "format {fmt:?}");
            assert_eq!(-fmt.max_finite(), *all.first().unwrap());
        }
        // Spot value: P=4, B=7, emax=14 tops out at 15*2^4 = 240.
        let fmt = FloatFormat::new(4, 7, 14).unwrap();
        assert_eq!(fmt.max_finite(), Dyadic::from_int(240));
        // P=2, B=1, emax=1 tops out at 1.5.
        let tiny = FloatFormat::new(2, 1, 1).unwrap();
        assert_eq!(tiny.max_finite(), Dyadic::new(3, -1));
    }

    #[test]
    fn enumeration_is_strictly_increasing_with_single_zero() {
        for fmt in oracle_formats() {
            let all = fmt.enumerate_finite().unwrap();
            assert!(all.windows(2).all(|w| w[0] < w[1]), "format {fmt:?}");
            assert_eq!(all.iter().filter(|v| v.is_zero()).count(), 1);
        }
    }

    #[test]
    fn enumeration_length_formula() {
        for fmt in oracle_formats() {
            let all = fmt.enumerate_finite().unwrap();
            let half = fmt.trailing_count();
            let expected = 2 * (u64::from(fmt.max_biased_exp()) * half + half - 1) + 1;
            assert_eq!(all.len() as u64, expected, "format {fmt:?}");
        }
    }

    #[test]
    fn tiny_format_enumerates_known_values() {
        let fmt = FloatFormat::new(2, 1, 1).unwrap();
        let all = fmt.enumerate_finite().unwrap();
        let expected: Vec<Dyadic> = [-3, -2, -1, 0, 1, 2, 3]
            .iter()
            .map(|&k| Dyadic::new(k, -1))
            .collect();
        assert_eq!(all, expected); // -1.5, -1, -0.5, 0, 0.5, 1, 1.5
    }

    #[test]
    fn enumeration_guard_rejects_large_formats() {
        let fmt = FloatFormat::new(30, 0, 100).unwrap();
        assert!(matches!(
            fmt.enumerate_finite(),
            Err(Error::EnumerationTooLarge(_))
        ));
    }

    #[test]
    fn encode_round_trips_every_enumerated_value() {
        for fmt in oracle_formats() {
            for v in fmt.enumerate_finite().unwrap() {
                let u = fmt.encode(v).unwrap();
                assert!(fmt.is_valid(u));
                assert_eq!(fmt.decode(u), v, "format {fmt:?} value {v}");
            }
        }
    }

    #[test]
    fn encode_rejects_unrepresentable_and_out_of_range() {
        let b8 = FloatFormat::binary8p4();
        assert!(matches!(
            b8.encode(Dyadic::ONE + Dyadic::pow2(-10)),
            Err(Error::NotRepresentable(_))
        ));
        assert!(matches!(
            b8.encode(Dyadic::from_int(300)),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            b8.encode(-Dyadic::from_int(300)),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn succ_is_the_order_successor_everywhere() {
        for fmt in oracle_formats() {
            let all = fmt.enumerate_finite().unwrap();
            for pair in all.windows(2) {
                let u = fmt.encode(pair[0]).unwrap();
                let next = fmt.succ(u).unwrap();
                assert_eq!(fmt.decode(next), pair[1], "format {fmt:?} after {}", pair[0]);
            }
            let top = fmt.encode(*all.last().unwrap()).unwrap();
            assert_eq!(fmt.succ(top), Err(Error::NoSuccessor));
        }
    }

    #[test]
    fn succ_named_cases() {
        let b8 = FloatFormat::binary8p4();
        // 1.0 steps to 1 + 2^-3.
        let one = b8.encode(Dyadic::ONE).unwrap();
        assert_eq!(
            b8.decode(b8.succ(one).unwrap()),
            Dyadic::ONE + Dyadic::pow2(-3)
        );
        // Largest subnormal carries into the smallest normal.
        let top_subnormal = UnpackedFloat {
            sign: false,
            biased_exponent: 0,
            trailing: b8.trailing_count() - 1,
        };
        let smallest_normal = b8.succ(top_subnormal).unwrap();
        assert_eq!(
            smallest_normal,
            UnpackedFloat {
                sign: false,
                biased_exponent: 1,
                trailing: 0
            }
        );
        // -min_positive steps up to the canonical zero.
        let neg_tiny = b8.encode(-b8.min_positive()).unwrap();
        assert_eq!(b8.succ(neg_tiny).unwrap(), UnpackedFloat::ZERO);
    }

    #[test]
    fn ulp_spacing_is_constant_within_a_binade() {
        for fmt in oracle_formats() {
            let all = fmt.enumerate_finite().unwrap();
            for pair in all.windows(2) {
                if pair[0].is_zero() || pair[1].is_zero() {
                    continue;
                }
                if pair[0].is_negative() != pair[1].is_negative() {
                    continue;
                }
                let u0 = fmt.encode(pair[0]).unwrap();
                let u1 = fmt.encode(pair[1]).unwrap();
                if u0.biased_exponent != u1.biased_exponent {
                    continue;
                }
                let e_eff = u0.biased_exponent.max(1) as i32 - fmt.exp_bias();
                assert_eq!(
                    pair[1] - pair[0],
                    fmt.ulp_at_exponent(e_eff),
                    "format {fmt:?} at {}",
                    pair[0]
                );
            }
        }
    }

    #[test]
    fn invalid_encodings_are_detected() {
        let b8 = FloatFormat::binary8p4();
        assert!(!b8.is_valid(UnpackedFloat {
            sign: false,
            biased_exponent: 16,
            trailing: 0
        }));
        assert!(!b8.is_valid(UnpackedFloat {
            sign: false,
            biased_exponent: 3,
            trailing: 8
        }));
        // Negative zero is not a canonical encoding.
        assert!(!b8.is_valid(UnpackedFloat {
            sign: true,
            biased_exponent: 0,
            trailing: 0
        }));
    }
}
