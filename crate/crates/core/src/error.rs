//! Library-wide error type.

/// Errors raised by format construction, rounding, and bias analysis.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("invalid format parameters: {0}")]
    InvalidFormat(String),

    #[error("unknown format preset `{0}` (available: bfloat16, binary8p4, p3)")]
    UnknownPreset(String),

    #[error("value is the largest finite value; it has no successor")]
    NoSuccessor,

    #[error("format too large to enumerate: precision-1 plus exponent bits is {0} (limit 24)")]
    EnumerationTooLarge(u32),

    #[error("cannot decompose zero")]
    DecomposeZero,

    #[error("|{value}| exceeds the largest finite value {max}")]
    OutOfRange { value: String, max: String },

    #[error("{0} is not exactly representable in the format")]
    NotRepresentable(String),

    #[error("random bit count {0} is outside 1..=32")]
    BitCount(u32),

    #[error("excess bit count must be at least 1")]
    ZeroExcess,

    #[error("enumeration guard exceeded: random bits {random} + excess bits {excess} > 30")]
    BiasGridTooLarge { random: u32, excess: u32 },

    #[error("floor-sum capacity exceeded: random bits {random} > 26 or random + excess = {total} > 120")]
    FloorSumTooLarge { random: u32, total: u32 },

    #[error("the corrected variant has no closed form; its bias is established by enumeration")]
    NoClosedForm,

    #[error("Monte Carlo grid is empty")]
    EmptyGrid,

    #[error("invalid Monte Carlo configuration: {0}")]
    InvalidMonteCarlo(String),

    #[error("invalid training configuration: {0}")]
    InvalidQat(String),
}
