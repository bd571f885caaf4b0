//! Rounding-bias computation: exact enumeration, semi-closed floor
//! sums, closed forms/bounds, and Monte Carlo sweeps.
//!
//! Bias is the expected value of `round(x) - x`, in units of the
//! destination spacing, when `x` is uniform over the fractions
//! `i * 2^-D` between two adjacent representable values (`D` excess
//! precision bits) and the N-bit draw is uniform.
//!
//! [`bias_enumerated`] is the ground truth for the whole module: it
//! walks every `(fraction, draw)` pair through the real predicate
//! functions and accumulates in integer arithmetic. The floor-sum and
//! closed-form routes are independent evaluations that the test suite
//! checks against it exactly.

use rayon::prelude::*;

use crate::dyadic::Dyadic;
use crate::error::Error;
use crate::formats::FloatFormat;
use crate::randbits::BitSource;
use crate::rounding::{
    decompose, pred_src, pred_srf, pred_srff, round, InnerRound, RoundingSpec,
};

/// Which stochastic rounding variant a bias figure refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SrVariant {
    Srff,
    Srf,
    Src,
}

impl SrVariant {
    pub fn name(&self) -> &'static str {
        match self {
            SrVariant::Srff => "srff",
            SrVariant::Srf => "srf",
            SrVariant::Src => "src",
        }
    }

    /// The rounding spec that drives this variant.
    pub fn spec(&self, bits: u32, inner: InnerRound) -> RoundingSpec {
        match self {
            SrVariant::Srff => RoundingSpec::Srff { bits },
            SrVariant::Srf => RoundingSpec::Srf { bits },
            SrVariant::Src => RoundingSpec::Src { bits, inner },
        }
    }
}

/// How a [`BiasResult`] was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BiasMethod {
    Enumerated,
    FloorSum,
    ClosedBound,
    MonteCarlo,
}

/// A bias value with its parameters and provenance.
#[derive(Clone, Debug)]
pub struct BiasResult {
    pub variant: SrVariant,
    pub random_bits: u32,
    /// Excess input precision bits; `None` means the infinite-precision
    /// input limit.
    pub excess_bits: Option<u32>,
    /// In destination-spacing (ULP) units. Exact except for Monte
    /// Carlo results, where it is the exact dyadic value of the f64
    /// estimate.
    pub value: Dyadic,
    pub method: BiasMethod,
    /// Standard error of the estimate (Monte Carlo only).
    pub mc_stderr: Option<f64>,
}

/// Apply the variant's predicate to one `(delta, draw)` pair.
fn variant_fires(variant: SrVariant, delta: Dyadic, noise: u64, bits: u32, inner: InnerRound) -> bool {
    match variant {
        SrVariant::Srff => pred_srff(delta, noise, bits),
        SrVariant::Srf => pred_srf(delta, noise, bits),
        SrVariant::Src => pred_src(delta, noise, bits, inner),
    }
}

fn check_bits(bits: u32) -> Result<(), Error> {
    if bits == 0 || bits > crate::randbits::MAX_BITS {
        return Err(Error::BitCount(bits));
    }
    Ok(())
}

/// Brute-force oracle: average `P(up) - delta` over the full
/// `2^D x 2^N` grid by calling the real predicates, accumulating the
/// numerator in integers over the common denominator `2^(2D+N)`.
///
/// `inner` only affects the corrected variant.
pub fn bias_enumerated(
    variant: SrVariant,
    random_bits: u32,
    excess_bits: u32,
    inner: InnerRound,
) -> Result<BiasResult, Error> {
    check_bits(random_bits)?;
    if excess_bits == 0 {
        return Err(Error::ZeroExcess);
    }
    if random_bits + excess_bits > 30 {
        return Err(Error::BiasGridTooLarge {
            random: random_bits,
            excess: excess_bits,
        });
    }
    let cells = 1u64 << excess_bits;
    let draws = 1u64 << random_bits;
    let mut up_total: u64 = 0;
    for i in 0..cells {
        let delta = Dyadic::new(i as i128, -(excess_bits as i32));
        for noise in 0..draws {
            up_total += u64::from(variant_fires(variant, delta, noise, random_bits, inner));
        }
    }
    // bias = 2^-D * sum_i (up_i * 2^-N - i * 2^-D)
    //      = (up_total * 2^D - sum_i(i) * 2^N) * 2^-(2D+N)
    let sum_i = ((cells as i128) - 1) * (cells as i128) / 2;
    let numerator = ((up_total as i128) << excess_bits) - (sum_i << random_bits);
    Ok(BiasResult {
        variant,
        random_bits,
        excess_bits: Some(excess_bits),
        value: Dyadic::new(numerator, -((2 * excess_bits + random_bits) as i32)),
        method: BiasMethod::Enumerated,
        mc_stderr: None,
    })
}

fn check_floor_sum_caps(random_bits: u32, excess_bits: u32) -> Result<(), Error> {
    check_bits(random_bits)?;
    if excess_bits == 0 {
        return Err(Error::ZeroExcess);
    }
    if random_bits > 26 || random_bits + excess_bits > 120 {
        return Err(Error::FloorSumTooLarge {
            random: random_bits,
            total: random_bits + excess_bits,
        });
    }
    Ok(())
}

/// Semi-closed form for the fast variant:
/// `2^-N * sum_n 2^-D * floor(2^(D-N) * n)  -  (1 - 2^-D)/2`,
/// evaluated exactly for any N, D (both N <= D and N > D).
pub fn bias_floor_sum_srff(random_bits: u32, excess_bits: u32) -> Result<BiasResult, Error> {
    check_floor_sum_caps(random_bits, excess_bits)?;
    let (n, d) = (random_bits, excess_bits);
    let mut total: i128 = 0;
    for noise in 0..(1u64 << n) {
        total += if d >= n {
            (noise as i128) << (d - n)
        } else {
            (noise as i128) >> (n - d)
        };
    }
    // value = total * 2^-(N+D) - (2^D - 1) * 2^-(D+1)
    //       = (2*total - (2^D - 1) * 2^N) * 2^-(N+D+1)
    let numerator = 2 * total - (((1i128 << d) - 1) << n);
    Ok(BiasResult {
        variant: SrVariant::Srff,
        random_bits: n,
        excess_bits: Some(d),
        value: Dyadic::new(numerator, -((n + d + 1) as i32)),
        method: BiasMethod::FloorSum,
        mc_stderr: None,
    })
}

/// Semi-closed form for the offset variant:
/// `2^-N * sum_n 2^-D * floor(n*2^(D-N) + 2^(D-N-1))  -  (1 - 2^-D)/2`.
pub fn bias_floor_sum_srf(random_bits: u32, excess_bits: u32) -> Result<BiasResult, Error> {
    check_floor_sum_caps(random_bits, excess_bits)?;
    let (n, d) = (random_bits, excess_bits);
    let mut total: i128 = 0;
    for noise in 0..(1u64 << n) {
        // floor((2n+1) * 2^(D-N-1))
        let odd = 2 * (noise as i128) + 1;
        let shift = d as i64 - n as i64 - 1;
        total += if shift >= 0 {
            odd << shift
        } else {
            odd >> (-shift)
        };
    }
    let numerator = 2 * total - (((1i128 << d) - 1) << n);
    Ok(BiasResult {
        variant: SrVariant::Srf,
        random_bits: n,
        excess_bits: Some(d),
        value: Dyadic::new(numerator, -((n + d + 1) as i32)),
        method: BiasMethod::FloorSum,
        mc_stderr: None,
    })
}

/// Closed forms and bounds.
///
/// With `excess_bits` absent (infinite-precision inputs): the fast
/// variant's bias is exactly `-2^-(N+1)` and the offset variant's is
/// exactly 0. With `excess_bits = D`: the fast variant's bound is
/// `(2^-D - 2^-N)/2` (tight for `N <= D`) and the offset variant's is
/// `2^-(D+1)` (tight for `N < D`). The corrected variant has no closed
/// form; its zero bias is established by enumeration.
pub fn bias_closed(
    variant: SrVariant,
    random_bits: u32,
    excess_bits: Option<u32>,
) -> Result<BiasResult, Error> {
    check_bits(random_bits)?;
    let n = random_bits;
    if let Some(d) = excess_bits {
        if d == 0 {
            return Err(Error::ZeroExcess);
        }
        if n + d > 120 {
            return Err(Error::FloorSumTooLarge { random: n, total: n + d });
        }
    }
    let value = match (variant, excess_bits) {
        (SrVariant::Srff, None) => Dyadic::new(-1, -(n as i32) - 1),
        (SrVariant::Srf, None) => Dyadic::ZERO,
        (SrVariant::Srff, Some(d)) => {
            // (2^-D - 2^-N)/2 = (2^N - 2^D) * 2^-(N+D+1)
            Dyadic::new((1i128 << n) - (1i128 << d), -((n + d + 1) as i32))
        }
        (SrVariant::Srf, Some(d)) => Dyadic::new(1, -(d as i32) - 1),
        (SrVariant::Src, _) => return Err(Error::NoClosedForm),
    };
    Ok(BiasResult {
        variant,
        random_bits: n,
        excess_bits,
        value,
        method: BiasMethod::ClosedBound,
        mc_stderr: None,
    })
}

/// Exact bias contributed by a single fraction:
/// `2^-N * sum_n [pred(delta, n)] - delta`.
pub fn bias_point_exact(
    variant: SrVariant,
    delta: Dyadic,
    random_bits: u32,
    inner: InnerRound,
) -> Dyadic {
    assert!(
        delta >= Dyadic::ZERO && delta < Dyadic::ONE,
        "delta must lie in [0, 1)"
    );
    assert!(
        (1..=26).contains(&random_bits),
        "random bit count {random_bits} outside 1..=26"
    );
    let mut count: i128 = 0;
    for noise in 0..(1u64 << random_bits) {
        count += i128::from(variant_fires(variant, delta, noise, random_bits, inner));
    }
    Dyadic::new(count, -(random_bits as i32)) - delta
}

/// Monte Carlo sweep configuration.
#[derive(Clone, Debug)]
pub struct McConfig {
    pub variant: SrVariant,
    pub inner: InnerRound,
    pub random_bits: u32,
    /// When present, the grid is every `src_format` value in
    /// `[lo, hi)`; when absent, a uniform midpoint grid of
    /// `grid_points` cells over `[lo, hi)`.
    pub src_format: Option<FloatFormat>,
    pub dst_format: FloatFormat,
    pub lo: Dyadic,
    pub hi: Dyadic,
    /// Cell count for the uniform grid; must be a power of two so the
    /// grid points stay exact. Ignored when `src_format` is present.
    pub grid_points: usize,
    pub samples_per_point: u64,
    pub seed: u64,
}

/// Per-grid-point Monte Carlo estimate.
#[derive(Clone, Copy, Debug)]
pub struct McPoint {
    pub x: f64,
    pub mean_rounded: f64,
    /// `mean_rounded - x` in value units.
    pub bias: f64,
    /// `P(up) - delta` estimate in destination-spacing units.
    pub bias_ulp: f64,
}

/// A completed Monte Carlo sweep with pooled statistics.
#[derive(Clone, Debug)]
pub struct McSweep {
    pub points: Vec<McPoint>,
    /// Grid average of the per-point ULP-unit bias estimates.
    pub avg_bias_ulp: f64,
    /// Pooled standard error of `avg_bias_ulp`.
    pub stderr_ulp: f64,
    /// Grid average of the value-unit bias estimates.
    pub avg_bias: f64,
}

impl McSweep {
    /// Repackage the sweep summary in the common result shape.
    pub fn to_bias_result(&self, cfg: &McConfig) -> BiasResult {
        let excess = cfg
            .src_format
            .map(|src| src.precision().saturating_sub(cfg.dst_format.precision()));
        BiasResult {
            variant: cfg.variant,
            random_bits: cfg.random_bits,
            excess_bits: excess,
            value: Dyadic::from_f64(self.avg_bias_ulp).expect("finite estimate"),
            method: BiasMethod::MonteCarlo,
            mc_stderr: Some(self.stderr_ulp),
        }
    }
}

/// Build the sweep grid for a configuration.
fn mc_grid(cfg: &McConfig) -> Result<Vec<Dyadic>, Error> {
    if cfg.lo >= cfg.hi {
        return Err(Error::InvalidMonteCarlo(format!(
            "empty interval [{}, {})",
            cfg.lo.to_decimal_string(),
            cfg.hi.to_decimal_string()
        )));
    }
    let m = cfg.dst_format.max_finite();
    if cfg.lo.abs() > m || cfg.hi.abs() > m {
        return Err(Error::InvalidMonteCarlo(
            "interval endpoints exceed the destination's finite range".into(),
        ));
    }
    let grid: Vec<Dyadic> = match cfg.src_format {
        Some(src) => src
            .enumerate_finite()?
            .into_iter()
            .filter(|v| *v >= cfg.lo && *v < cfg.hi)
            .collect(),
        None => {
            if cfg.grid_points == 0 || !cfg.grid_points.is_power_of_two() {
                return Err(Error::InvalidMonteCarlo(format!(
                    "grid_points {} is not a power of two",
                    cfg.grid_points
                )));
            }
            let log2 = cfg.grid_points.trailing_zeros() as i32;
            let width = cfg.hi - cfg.lo;
            // Midpoints of the uniform cells: lo + (2j+1)/2^(k+1) * width.
            (0..cfg.grid_points)
                .map(|j| cfg.lo + width * Dyadic::new(2 * j as i128 + 1, -(log2 + 1)))
                .collect()
        }
    };
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    Ok(grid)
}

struct PointAccum {
    point: McPoint,
    variance_ulp: f64,
}

fn mc_point(cfg: &McConfig, index: usize, x: Dyadic) -> Result<PointAccum, Error> {
    let x_f = x.to_f64();
    if x.is_zero() {
        // Zero is exactly representable: rounding returns it for
        // every draw.
        return Ok(PointAccum {
            point: McPoint {
                x: 0.0,
                mean_rounded: 0.0,
                bias: 0.0,
                bias_ulp: 0.0,
            },
            variance_ulp: 0.0,
        });
    }
    let dec = decompose(x, &cfg.dst_format)?;
    let p = cfg.dst_format.precision() as i32;
    let lower_mag = Dyadic::new(dec.floor_significand as i128, dec.exponent - (p - 1));
    let lower = if dec.sign { -lower_mag } else { lower_mag };
    let ulp = cfg.dst_format.ulp_at_exponent(dec.exponent);
    let spec = cfg.variant.spec(cfg.random_bits, cfg.inner);
    let mut source = BitSource::seeded(cfg.seed ^ index as u64);
    let samples = cfg.samples_per_point;
    let mut ups: u64 = 0;
    for _ in 0..samples {
        let r = round(x, &cfg.dst_format, spec, &mut source);
        if r != lower {
            ups += 1;
        }
    }
    let p_up = ups as f64 / samples as f64;
    let delta = dec.delta.to_f64();
    let bias_ulp = p_up - delta;
    let sign_factor = if dec.sign { -1.0 } else { 1.0 };
    let ulp_f = ulp.to_f64();
    Ok(PointAccum {
        point: McPoint {
            x: x_f,
            mean_rounded: lower.to_f64() + sign_factor * ulp_f * p_up,
            bias: sign_factor * ulp_f * bias_ulp,
            bias_ulp,
        },
        variance_ulp: p_up * (1.0 - p_up) / samples as f64,
    })
}

/// Run a Monte Carlo bias sweep: per grid point, round
/// `samples_per_point` times through the real rounding path with an
/// independently seeded source (seed xor point index), and pool the
/// per-point estimates.
///
/// Deterministic for a given configuration regardless of the number of
/// worker threads.
pub fn bias_monte_carlo(cfg: &McConfig) -> Result<McSweep, Error> {
    check_bits(cfg.random_bits)?;
    if cfg.samples_per_point == 0 {
        return Err(Error::InvalidMonteCarlo(
            "samples_per_point must be at least 1".into(),
        ));
    }
    let grid = mc_grid(cfg)?;
    let accums: Result<Vec<PointAccum>, Error> = grid
        .par_iter()
        .enumerate()
        .map(|(index, &x)| mc_point(cfg, index, x))
        .collect();
    let accums = accums?;
    let count = accums.len() as f64;
    let avg_bias_ulp = accums.iter().map(|a| a.point.bias_ulp).sum::<f64>() / count;
    let avg_bias = accums.iter().map(|a| a.point.bias).sum::<f64>() / count;
    let stderr_ulp = accums.iter().map(|a| a.variance_ulp).sum::<f64>().sqrt() / count;
    Ok(McSweep {
        points: accums.into_iter().map(|a| a.point).collect(),
        avg_bias_ulp,
        stderr_ulp,
        avg_bias,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TNE: InnerRound = InnerRound::TiesToEven;
    const TNO: InnerRound = InnerRound::TiesToOdd;

    fn d(num: i128, exp: i32) -> Dyadic {
        Dyadic::new(num, exp)
    }

    #[test]
    fn enumerated_matches_published_values() {
        // The three headline numbers for N=3, D=5.
        assert_eq!(
            bias_enumerated(SrVariant::Srff, 3, 5, TNE).unwrap().value,
            d(-3, -6) // -0.046875
        );
        assert_eq!(
            bias_enumerated(SrVariant::Srf, 3, 5, TNE).unwrap().value,
            d(1, -6) // 0.015625
        );
        assert_eq!(
            bias_enumerated(SrVariant::Src, 3, 5, TNE).unwrap().value,
            Dyadic::ZERO
        );
    }

    #[test]
    fn enumerated_fast_variant_is_unbiased_at_matching_precision() {
        for n in 1..=6u32 {
            assert_eq!(
                bias_enumerated(SrVariant::Srff, n, n, TNE).unwrap().value,
                Dyadic::ZERO,
                "N=D={n}"
            );
        }
    }

    #[test]
    fn enumerated_agrees_with_closed_forms_in_range() {
        for n in 1..=6u32 {
            for dd in n..=6u32 {
                let enumerated = bias_enumerated(SrVariant::Srff, n, dd, TNE).unwrap().value;
                let closed = bias_closed(SrVariant::Srff, n, Some(dd)).unwrap().value;
                assert_eq!(enumerated, closed, "fast variant N={n} D={dd}");
            }
            for dd in (n + 1)..=6u32 {
                let enumerated = bias_enumerated(SrVariant::Srf, n, dd, TNE).unwrap().value;
                assert_eq!(enumerated, d(1, -(dd as i32) - 1), "offset variant N={n} D={dd}");
            }
        }
    }

    #[test]
    fn floor_sums_equal_enumeration() {
        for n in 1..=6u32 {
            for dd in 1..=6u32 {
                assert_eq!(
                    bias_floor_sum_srff(n, dd).unwrap().value,
                    bias_enumerated(SrVariant::Srff, n, dd, TNE).unwrap().value,
                    "fast N={n} D={dd}"
                );
                assert_eq!(
                    bias_floor_sum_srf(n, dd).unwrap().value,
                    bias_enumerated(SrVariant::Srf, n, dd, TNE).unwrap().value,
                    "offset N={n} D={dd}"
                );
            }
        }
    }

    #[test]
    fn corrected_variant_is_unbiased_for_both_tie_rules() {
        for n in 1..=5u32 {
            for dd in n..=6u32 {
                for inner in [TNE, TNO] {
                    assert_eq!(
                        bias_enumerated(SrVariant::Src, n, dd, inner).unwrap().value,
                        Dyadic::ZERO,
                        "N={n} D={dd} inner={inner:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn closed_forms_infinite_precision() {
        assert_eq!(
            bias_closed(SrVariant::Srff, 2, None).unwrap().value,
            d(-1, -3) // -0.125
        );
        assert_eq!(
            bias_closed(SrVariant::Srf, 7, None).unwrap().value,
            Dyadic::ZERO
        );
        assert_eq!(
            bias_closed(SrVariant::Srff, 3, Some(5)).unwrap().value,
            d(-3, -6)
        );
        assert!(matches!(
            bias_closed(SrVariant::Src, 3, Some(5)),
            Err(Error::NoClosedForm)
        ));
    }

    #[test]
    fn bounds_hold_with_expected_tightness() {
        for n in 1..=8u32 {
            for dd in 1..=8u32 {
                let fast = bias_enumerated(SrVariant::Srff, n, dd, TNE).unwrap().value;
                let fast_bound = bias_closed(SrVariant::Srff, n, Some(dd)).unwrap().value;
                assert!(fast <= fast_bound, "fast bound violated at N={n} D={dd}");
                if n <= dd {
                    assert_eq!(fast, fast_bound, "fast bound not tight at N={n} D={dd}");
                }
                let offset = bias_enumerated(SrVariant::Srf, n, dd, TNE).unwrap().value;
                let offset_bound = d(1, -(dd as i32) - 1);
                assert!(offset <= offset_bound, "offset bound violated at N={n} D={dd}");
                if n < dd {
                    assert_eq!(offset, offset_bound, "offset bound not tight at N={n} D={dd}");
                } else {
                    // At N = D the offset variant is exactly unbiased,
                    // strictly inside its bound.
                    if n == dd {
                        assert_eq!(offset, Dyadic::ZERO);
                    }
                }
            }
        }
    }

    #[test]
    fn guards_reject_oversized_requests() {
        assert!(matches!(
            bias_enumerated(SrVariant::Srff, 10, 21, TNE),
            Err(Error::BiasGridTooLarge { .. })
        ));
        assert!(matches!(
            bias_enumerated(SrVariant::Srff, 3, 0, TNE),
            Err(Error::ZeroExcess)
        ));
        assert!(matches!(
            bias_enumerated(SrVariant::Srff, 0, 3, TNE),
            Err(Error::BitCount(0))
        ));
        assert!(matches!(
            bias_floor_sum_srff(27, 5),
            Err(Error::FloorSumTooLarge { .. })
        ));
    }

    #[test]
    fn point_bias_examples() {
        // Exactly representable points contribute nothing.
        assert_eq!(
            bias_point_exact(SrVariant::Srff, Dyadic::ZERO, 4, TNE),
            Dyadic::ZERO
        );
        // delta = 2^-(N+1) never fires the fast predicate: the whole
        // remainder is lost.
        for n in 1..=6u32 {
            let delta = d(1, -(n as i32) - 1);
            assert_eq!(
                bias_point_exact(SrVariant::Srff, delta, n, TNE),
                -delta,
                "N={n}"
            );
        }
        // Offset variant at delta = 1/2, N = 1: fires only for n = 1,
        // so P(up) = 1/2 = delta.
        assert_eq!(
            bias_point_exact(SrVariant::Srf, d(1, -1), 1, TNE),
            Dyadic::ZERO
        );
    }

    #[test]
    fn grid_average_of_point_bias_matches_enumeration() {
        // Averaging the per-point function over the D-grid must equal
        // the enumerated value exactly (two independent code paths).
        for variant in [SrVariant::Srff, SrVariant::Srf, SrVariant::Src] {
            let (n, dd) = (3u32, 5u32);
            let mut total = Dyadic::ZERO;
            for i in 0..(1u64 << dd) {
                let delta = Dyadic::new(i as i128, -(dd as i32));
                total = total + bias_point_exact(variant, delta, n, TNE);
            }
            let average = total.shifted(-(dd as i32));
            assert_eq!(
                average,
                bias_enumerated(variant, n, dd, TNE).unwrap().value,
                "{variant:?}"
            );
        }
    }

    fn mc_config(variant: SrVariant) -> McConfig {
        McConfig {
            variant,
            inner: TNE,
            random_bits: 3,
            src_format: Some(FloatFormat::bfloat16()),
            dst_format: FloatFormat::p3(),
            lo: Dyadic::ONE,
            hi: d(5, -2),
            grid_points: 0,
            samples_per_point: 4000,
            seed: 11,
        }
    }

    #[test]
    fn mc_source_grid_covers_one_destination_gap() {
        let cfg = mc_config(SrVariant::Srff);
        let grid = mc_grid(&cfg).unwrap();
        // BFloat16 steps by 2^-7 inside [1, 2): 32 values in [1, 1.25).
        assert_eq!(grid.len(), 32);
        assert_eq!(grid[0], Dyadic::ONE);
        assert_eq!(grid[31], Dyadic::ONE + d(31, -7));
    }

    #[test]
    fn mc_midpoint_grid_is_exact() {
        let cfg = McConfig {
            src_format: None,
            grid_points: 8,
            lo: Dyadic::ONE,
            hi: Dyadic::from_int(2),
            ..mc_config(SrVariant::Srff)
        };
        let grid = mc_grid(&cfg).unwrap();
        assert_eq!(grid.len(), 8);
        assert_eq!(grid[0], Dyadic::ONE + d(1, -4));
        assert_eq!(grid[7], Dyadic::ONE + d(15, -4));
    }

    #[test]
    fn mc_estimates_track_exact_references() {
        // 4000 samples over the 32-point source grid: the pooled average
        // must sit within 4 pooled standard errors of the exact value.
        for (variant, reference) in [
            (SrVariant::Srff, d(-3, -6)),
            (SrVariant::Srf, d(1, -6)),
            (SrVariant::Src, Dyadic::ZERO),
        ] {
            let sweep = bias_monte_carlo(&mc_config(variant)).unwrap();
            let diff = (sweep.avg_bias_ulp - reference.to_f64()).abs();
            assert!(
                diff <= 4.0 * sweep.stderr_ulp,
                "{variant:?}: {} vs {} (stderr {})",
                sweep.avg_bias_ulp,
                reference.to_f64(),
                sweep.stderr_ulp
            );
        }
    }

    #[test]
    fn mc_single_point_converges_to_point_bias() {
        // A one-cell midpoint grid centered on delta = 5/16, where the
        // fast predicate fires with probability 1/4.
        let cfg = McConfig {
            variant: SrVariant::Srff,
            inner: TNE,
            random_bits: 2,
            src_format: None,
            dst_format: FloatFormat::binary8p4(),
            lo: Dyadic::ONE + d(4, -7),
            hi: Dyadic::ONE + d(6, -7),
            grid_points: 1,
            samples_per_point: 1_000_000,
            seed: 5,
        };
        let sweep = bias_monte_carlo(&cfg).unwrap();
        assert_eq!(sweep.points.len(), 1);
        let exact = bias_point_exact(SrVariant::Srff, d(5, -4), 2, TNE).to_f64();
        let tol = 4.0 * sweep.stderr_ulp;
        assert!(
            (sweep.avg_bias_ulp - exact).abs() <= tol,
            "{} vs {exact} (tol {tol})",
            sweep.avg_bias_ulp
        );
    }

    #[test]
    fn mc_is_deterministic_and_thread_independent() {
        let cfg = mc_config(SrVariant::Srf);
        let a = bias_monte_carlo(&cfg).unwrap();
        let b = bias_monte_carlo(&cfg).unwrap();
        assert_eq!(a.avg_bias_ulp.to_bits(), b.avg_bias_ulp.to_bits());
        assert_eq!(a.stderr_ulp.to_bits(), b.stderr_ulp.to_bits());
        for (x, y) in a.points.iter().zip(&b.points) {
            assert_eq!(x.mean_rounded.to_bits(), y.mean_rounded.to_bits());
        }
    }

    #[test]
    fn mc_validates_configuration() {
        let mut cfg = mc_config(SrVariant::Srff);
        cfg.samples_per_point = 0;
        assert!(matches!(
            bias_monte_carlo(&cfg),
            Err(Error::InvalidMonteCarlo(_))
        ));
        let mut cfg = mc_config(SrVariant::Srff);
        cfg.hi = cfg.lo;
        assert!(matches!(
            bias_monte_carlo(&cfg),
            Err(Error::InvalidMonteCarlo(_))
        ));
        let mut cfg = mc_config(SrVariant::Srff);
        cfg.src_format = None;
        cfg.grid_points = 3;
        assert!(matches!(
            bias_monte_carlo(&cfg),
            Err(Error::InvalidMonteCarlo(_))
        ));
        // An interval holding no source values.
        let mut cfg = mc_config(SrVariant::Srff);
        cfg.lo = Dyadic::ONE + d(1, -9);
        cfg.hi = Dyadic::ONE + d(1, -8);
        assert!(matches!(bias_monte_carlo(&cfg), Err(Error::EmptyGrid)));
    }

    #[test]
    fn result_carries_provenance() {
        let r = bias_enumerated(SrVariant::Srf, 3, 5, TNE).unwrap();
        assert_eq!(r.method, BiasMethod::Enumerated);
        assert_eq!(r.excess_bits, Some(5));
        assert_eq!(r.mc_stderr, None);
        let sweep = bias_monte_carlo(&mc_config(SrVariant::Src)).unwrap();
        let r = sweep.to_bias_result(&mc_config(SrVariant::Src));
        assert_eq!(r.method, BiasMethod::MonteCarlo);
        assert_eq!(r.excess_bits, Some(5));
        assert!(r.mc_stderr.is_some());
    }
}
