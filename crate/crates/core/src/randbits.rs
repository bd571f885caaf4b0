//! Sources of uniform N-bit integers for stochastic rounding.
//!
//! Three source kinds are provided: a seeded pseudorandom generator
//! (reproducible across runs and platforms), an exhaustive counter
//! whose k-th draw is `k mod 2^N` (for exact up-fraction tests), and a
//! constant source (for pinning a single draw in property tests).
//!
//! Draws take the top N bits of each 64-bit generator word.

use crate::error::Error;

/// Largest supported draw width.
pub const MAX_BITS: u32 = 32;

/// SplitMix64: the 64-bit mixer from Steele, Lea, and Flood's
/// SplittableRandom line, as published in Vigna's reference C code.
/// One addition of the golden-ratio increment followed by a two-round
/// xor-multiply finalizer; passes BigCrush when used as a stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> SplitMix64 {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// A stateful supplier of uniform N-bit integers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BitSource {
    /// Reproducible pseudorandom draws from [`SplitMix64`].
    SeededPrng(SplitMix64),
    /// The k-th draw is `k mod 2^N`; cycles through every value.
    Counter { draws: u64 },
    /// Every draw returns the same value, masked to N bits.
    Fixed { value: u64 },
}

impl BitSource {
    pub fn seeded(seed: u64) -> BitSource {
        BitSource::SeededPrng(SplitMix64::new(seed))
    }

    pub fn counter() -> BitSource {
        BitSource::Counter { draws: 0 }
    }

    pub fn fixed(value: u64) -> BitSource {
        BitSource::Fixed { value }
    }

    /// Next integer in `[0, 2^bits)`, advancing the source state.
    pub fn next_bits(&mut self, bits: u32) -> Result<u64, Error> {
        if bits == 0 || bits > MAX_BITS {
            return Err(Error::BitCount(bits));
        }
        let mask = (1u64 << bits) - 1;
        Ok(match self {
            BitSource::SeededPrng(prng) => prng.next_u64() >> (64 - bits),
            BitSource::Counter { draws } => {
                let v = *draws & mask;
                *draws = draws.wrapping_add(1);
                v
            }
            BitSource::Fixed { value } => *value & mask,
        })
    }
}
