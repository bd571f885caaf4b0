//! Few-bit stochastic rounding for parameterized binary floating-point
//! formats.
//!
//! The crate provides:
//!
//! * [`formats`]: format triples (precision, bias, max exponent) with
//!   exact decode/encode/successor/enumeration over their finite value
//!   sets, including subnormals.
//! * [`rounding`]: exact decomposition of a value into significand and
//!   fractional remainder, deterministic tie-breaking predicates, and
//!   three stochastic predicates driven by N-bit draws — the fast
//!   form, the half-offset form, and the pre-corrected form.
//! * [`randbits`]: reproducible seeded, exhaustive-counter, and fixed
//!   bit sources.
//! * [`bias`]: exact bias oracles (full-grid enumeration), semi-closed
//!   floor sums, closed forms/bounds, and Monte Carlo sweeps.
//! * [`experiments`]: packaged bias sweeps over a destination binade
//!   and a toy quantization-aware-training loop.
//! * [`cli`]: the `fbsr` command-line surface.
//!
//! All analysis arithmetic uses exact dyadic rationals ([`Dyadic`]);
//! host doubles appear only at the CLI and statistics boundaries.

pub mod bias;
pub mod cli;
pub mod dyadic;
pub mod error;
pub mod experiments;
pub mod formats;
pub mod randbits;
pub mod rounding;

pub use bias::{
    bias_closed, bias_enumerated, bias_floor_sum_srf, bias_floor_sum_srff, bias_monte_carlo,
    BiasMethod, BiasResult, McConfig, McSweep, SrVariant,
};
pub use dyadic::Dyadic;
pub use error::Error;
pub use formats::{FloatFormat, UnpackedFloat};
pub use randbits::BitSource;
pub use rounding::{decompose, round, Decomposition, InnerRound, RoundingSpec};
