//! Packaged demonstrations: bias sweeps over one destination binade
//! and a toy quantization-aware-training loop.
//!
//! The sweeps pair Monte Carlo estimates with the exact references
//! from [`crate::bias`], so their summaries are directly testable. The
//! training loop stores weights in a low-precision format, quantizes
//! each update to a fixed intermediate precision, adds exactly, and
//! writes back through [`crate::rounding::round`] — isolating the
//! systematic drift that a biased rounding rule injects into an
//! otherwise zero-mean update stream.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::bias::{bias_enumerated, bias_monte_carlo, McConfig, SrVariant};
use crate::dyadic::Dyadic;
use crate::error::Error;
use crate::formats::FloatFormat;
use crate::randbits::{BitSource, SplitMix64};
use crate::rounding::{quantize_significand, round, InnerRound, RoundingSpec};

/// Number format used in CSV bodies: 17 significant decimal digits,
/// enough to round-trip any binary64 value.
pub fn csv_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_preamble<W: Write>(out: &mut W, keys: &[(&str, String)]) -> io::Result<()> {
    for (key, value) in keys {
        writeln!(out, "# {key}={value}")?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Bias sweeps
// ---------------------------------------------------------------------------

/// Configuration for the uniform-grid sweep (fast and offset variants
/// over one destination binade).
#[derive(Clone, Copy, Debug)]
pub struct Figure1Config {
    pub random_bits: u32,
    pub samples_per_point: u64,
    pub grid_points: usize,
    pub seed: u64,
}

impl Default for Figure1Config {
    fn default() -> Self {
        Figure1Config {
            random_bits: 2,
            samples_per_point: 5000,
            grid_points: 256,
            seed: 1,
        }
    }
}

/// One grid point of the uniform sweep.
#[derive(Clone, Copy, Debug)]
pub struct Figure1Row {
    pub x: f64,
    pub mean_srff: f64,
    pub mean_srf: f64,
}

/// Per-variant summary of a sweep: the Monte Carlo grid average in
/// destination-spacing units, its pooled standard error, and the exact
/// expected value for the sweep's grid.
#[derive(Clone, Copy, Debug)]
pub struct VariantStats {
    pub variant: SrVariant,
    pub avg_bias_ulp: f64,
    pub stderr_ulp: f64,
    pub reference: Dyadic,
}

#[derive(Clone, Debug)]
pub struct Figure1Output {
    pub rows: Vec<Figure1Row>,
    pub srff: VariantStats,
    pub srf: VariantStats,
}

/// Derive a per-variant base seed so the two sweeps draw independent
/// noise streams while remaining reproducible.
fn variant_seed(seed: u64, variant: SrVariant) -> u64 {
    let tag = match variant {
        SrVariant::Srff => 1u64,
        SrVariant::Srf => 2,
        SrVariant::Src => 3,
    };
    // One round of the SplitMix64 stream: decorrelates adjacent tags.
    SplitMix64::new(seed.wrapping_add(tag)).next_u64()
}

/// Uniform-midpoint-grid sweep across the destination binade [1, 2):
/// `grid_points` cells, each sampled `samples_per_point` times under
/// the fast and offset variants.
///
/// The grid points sit at cell midpoints, so the exact expected grid
/// average equals the infinite-precision limits (`-2^-(N+1)` for the
/// fast variant, 0 for the offset variant): the midpoints are the odd
/// multiples of half a cell, which average every predicate exactly as
/// the uniform integral does.
pub fn run_figure1(cfg: &Figure1Config) -> Result<Figure1Output, Error> {
    let dst = FloatFormat::binary8p4();
    let base = McConfig {
        variant: SrVariant::Srff,
        inner: InnerRound::TiesToEven,
        random_bits: cfg.random_bits,
        src_format: None,
        dst_format: dst,
        lo: Dyadic::ONE,
        hi: Dyadic::from_int(2),
        grid_points: cfg.grid_points,
        samples_per_point: cfg.samples_per_point,
        seed: 0,
    };
    let srff_sweep = bias_monte_carlo(&McConfig {
        variant: SrVariant::Srff,
        seed: variant_seed(cfg.seed, SrVariant::Srff),
        ..base.clone()
    })?;
    let srf_sweep = bias_monte_carlo(&McConfig {
        variant: SrVariant::Srf,
        seed: variant_seed(cfg.seed, SrVariant::Srf),
        ..base
    })?;
    let rows = srff_sweep
        .points
        .iter()
        .zip(&srf_sweep.points)
        .map(|(a, b)| Figure1Row {
            x: a.x,
            mean_srff: a.mean_rounded,
            mean_srf: b.mean_rounded,
        })
        .collect();
    Ok(Figure1Output {
        rows,
        srff: VariantStats {
            variant: SrVariant::Srff,
            avg_bias_ulp: srff_sweep.avg_bias_ulp,
            stderr_ulp: srff_sweep.stderr_ulp,
            reference: Dyadic::new(-1, -(cfg.random_bits as i32) - 1),
        },
        srf: VariantStats {
            variant: SrVariant::Srf,
            avg_bias_ulp: srf_sweep.avg_bias_ulp,
            stderr_ulp: srf_sweep.stderr_ulp,
            reference: Dyadic::ZERO,
        },
    })
}

impl Figure1Output {
    /// CSV with a `#`-prefixed config preamble and the fixed header
    /// `x,mean_srff,mean_srf`.
    pub fn write_csv<W: Write>(&self, out: &mut W, cfg: &Figure1Config) -> io::Result<()> {
        write_preamble(
            out,
            &[
                ("command", "fig1".into()),
                ("bits", cfg.random_bits.to_string()),
                ("samples", cfg.samples_per_point.to_string()),
                ("points", cfg.grid_points.to_string()),
                ("seed", cfg.seed.to_string()),
            ],
        )?;
        writeln!(out, "x,mean_srff,mean_srf")?;
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{}",
                csv_f64(row.x),
                csv_f64(row.mean_srff),
                csv_f64(row.mean_srf)
            )?;
        }
        Ok(())
    }
}

/// Configuration for the source-format sweep (all three variants over
/// one destination inter-value gap).
#[derive(Clone, Copy, Debug)]
pub struct Figure2Config {
    pub random_bits: u32,
    pub samples_per_point: u64,
    pub seed: u64,
}

impl Default for Figure2Config {
    fn default() -> Self {
        Figure2Config {
            random_bits: 3,
            samples_per_point: 100_000,
            seed: 1,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Figure2Row {
    pub x: f64,
    pub mean_srff: f64,
    pub mean_srf: f64,
    pub mean_src: f64,
}

#[derive(Clone, Debug)]
pub struct Figure2Output {
    pub rows: Vec<Figure2Row>,
    pub stats: [VariantStats; 3],
    /// Excess precision between source and destination.
    pub excess_bits: u32,
}

/// Source-format sweep: every BFloat16 value in `[1, 1.25)` — one
/// destination gap of the precision-3 format, 32 source points —
/// rounded `samples_per_point` times under all three variants. The
/// source points are exactly the `D = 5` fraction grid, so each
/// variant's exact reference comes from full-grid enumeration.
pub fn run_figure2(cfg: &Figure2Config) -> Result<Figure2Output, Error> {
    let src = FloatFormat::bfloat16();
    let dst = FloatFormat::p3();
    let excess = src.precision() - dst.precision();
    let base = McConfig {
        variant: SrVariant::Srff,
        inner: InnerRound::TiesToEven,
        random_bits: cfg.random_bits,
        src_format: Some(src),
        dst_format: dst,
        lo: Dyadic::ONE,
        hi: Dyadic::new(5, -2),
        grid_points: 0,
        samples_per_point: cfg.samples_per_point,
        seed: 0,
    };
    let variants = [SrVariant::Srff, SrVariant::Srf, SrVariant::Src];
    let mut sweeps = Vec::with_capacity(3);
    for variant in variants {
        sweeps.push(bias_monte_carlo(&McConfig {
            variant,
            seed: variant_seed(cfg.seed, variant),
            ..base.clone()
        })?);
    }
    let rows = (0..sweeps[0].points.len())
        .map(|i| Figure2Row {
            x: sweeps[0].points[i].x,
            mean_srff: sweeps[0].points[i].mean_rounded,
            mean_srf: sweeps[1].points[i].mean_rounded,
            mean_src: sweeps[2].points[i].mean_rounded,
        })
        .collect();
    let mut stats = Vec::with_capacity(3);
    for (variant, sweep) in variants.iter().zip(&sweeps) {
        let reference =
            bias_enumerated(*variant, cfg.random_bits, excess, InnerRound::TiesToEven)?.value;
        stats.push(VariantStats {
            variant: *variant,
            avg_bias_ulp: sweep.avg_bias_ulp,
            stderr_ulp: sweep.stderr_ulp,
            reference,
        });
    }
    Ok(Figure2Output {
        rows,
        stats: [stats[0], stats[1], stats[2]],
        excess_bits: excess,
    })
}

impl Figure2Output {
    /// CSV with a `#`-prefixed config preamble and the fixed header
    /// `x,mean_srff,mean_srf,mean_src`.
    pub fn write_csv<W: Write>(&self, out: &mut W, cfg: &Figure2Config) -> io::Result<()> {
        write_preamble(
            out,
            &[
                ("command", "fig2".into()),
                ("bits", cfg.random_bits.to_string()),
                ("samples", cfg.samples_per_point.to_string()),
                ("seed", cfg.seed.to_string()),
                ("src-format", "bfloat16".into()),
                ("dst-format", "p3".into()),
            ],
        )?;
        writeln!(out, "x,mean_srff,mean_srf,mean_src")?;
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{},{}",
                csv_f64(row.x),
                csv_f64(row.mean_srff),
                csv_f64(row.mean_srf),
                csv_f64(row.mean_src)
            )?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Toy quantization-aware training
// ---------------------------------------------------------------------------

/// Which toy problem the training loop runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QatProblem {
    /// A single weight at 1.0 receiving alternating `+eps, -eps`
    /// updates: a zero-mean stream that isolates pure rounding drift.
    DriftWalk,
    /// Gradient descent on a fixed synthetic least-squares problem
    /// (32 parameters, 128 rows).
    LinearRegression,
}

impl QatProblem {
    pub fn name(&self) -> &'static str {
        match self {
            QatProblem::DriftWalk => "driftwalk",
            QatProblem::LinearRegression => "linreg",
        }
    }
}

/// Training-loop configuration.
#[derive(Clone, Debug)]
pub struct QatConfig {
    /// Format the weights are stored in.
    pub weight_format: FloatFormat,
    /// Significand precision (bits) that update arithmetic is carried
    /// at before the add.
    pub update_precision: u32,
    /// Write-back rounding rule (carries the random-bit count for
    /// stochastic modes).
    pub mode: RoundingSpec,
    pub steps: usize,
    /// Gradient-descent step size (regression problem only).
    pub learning_rate: f64,
    pub seed: u64,
    pub problem: QatProblem,
}

impl QatConfig {
    pub fn new(problem: QatProblem, mode: RoundingSpec) -> QatConfig {
        QatConfig {
            weight_format: FloatFormat::binary8p4(),
            update_precision: 8,
            mode,
            steps: match problem {
                QatProblem::DriftWalk => 10_000,
                QatProblem::LinearRegression => 800,
            },
            learning_rate: 0.1,
            seed: 1,
            problem,
        }
    }

    /// Soft checks: conditions the loop tolerates but that deserve a
    /// heads-up (studying too many random bits for the available
    /// excess precision is deliberate in some runs).
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(bits) = self.mode.random_bits() {
            let excess = self
                .update_precision
                .saturating_sub(self.weight_format.precision());
            if bits > excess {
                out.push(format!(
                    "random bits ({bits}) exceed the excess precision of the updates \
                     ({} - {} = {excess}); draws beyond the excess cannot all matter",
                    self.update_precision,
                    self.weight_format.precision()
                ));
            }
        }
        out
    }

    fn validate(&self) -> Result<(), Error> {
        self.mode
            .validate()
            .map_err(|_| Error::InvalidQat("random bit count outside 1..=32".into()))?;
        if self.update_precision < self.weight_format.precision() {
            return Err(Error::InvalidQat(format!(
                "update precision {} is below the weight precision {}",
                self.update_precision,
                self.weight_format.precision()
            )));
        }
        if self.update_precision > 53 {
            return Err(Error::InvalidQat(
                "update precision above 53 cannot be sourced from f64 gradients".into(),
            ));
        }
        if self.problem == QatProblem::LinearRegression
            && !(self.learning_rate.is_finite() && self.learning_rate > 0.0)
        {
            return Err(Error::InvalidQat(format!(
                "learning rate {} must be positive and finite",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// One record of a training trace.
#[derive(Clone, Copy, Debug)]
pub struct QatStep {
    pub step: usize,
    pub loss: f64,
    pub mean_abs_weight: f64,
}

/// A completed training run: per-step records (including the initial
/// state, so `records.len() == steps + 1`) plus terminal summary flags.
#[derive(Clone, Debug)]
pub struct QatTrace {
    pub records: Vec<QatStep>,
    pub final_loss: f64,
    pub final_mean_abs_weight: f64,
    /// Weights were bitwise unchanged over the final quarter of the
    /// run (meaningful chiefly under deterministic modes).
    pub stagnated: bool,
    /// Final loss exceeds 10x the best loss seen during the run.
    pub diverged: bool,
}

impl QatTrace {
    /// CSV with a `#`-prefixed config preamble and the fixed header
    /// `step,loss,mean_abs_weight`.
    pub fn write_csv<W: Write>(&self, out: &mut W, cfg: &QatConfig) -> io::Result<()> {
        let mut keys = vec![
            ("command", "qat".to_string()),
            ("problem", cfg.problem.name().to_string()),
            ("mode", cfg.mode.name().to_string()),
        ];
        if let Some(bits) = cfg.mode.random_bits() {
            keys.push(("bits", bits.to_string()));
        }
        keys.push(("steps", cfg.steps.to_string()));
        keys.push(("update-precision", cfg.update_precision.to_string()));
        keys.push(("lr", csv_f64(cfg.learning_rate)));
        keys.push(("seed", cfg.seed.to_string()));
        keys.push(("stagnated", self.stagnated.to_string()));
        keys.push(("diverged", self.diverged.to_string()));
        write_preamble(out, &keys)?;
        writeln!(out, "step,loss,mean_abs_weight")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{}",
                r.step,
                csv_f64(r.loss),
                csv_f64(r.mean_abs_weight)
            )?;
        }
        Ok(())
    }
}

/// Drift-walk update magnitude as a fraction of the weight's spacing
/// at 1.0: `3/128` of one spacing. Two properties are deliberate:
///
/// - The remainder is off the stochastic grid (odd numerator,
///   denominator finer than the grid for every small bit count), so
///   the fast rule's per-step bias is strictly negative. An on-grid
///   remainder would make every stochastic rule exactly proportional
///   and hide the drift entirely.
/// - The remainder is below half a grid cell (3/128 < 2^-(N+1) for
///   N = 3), so the corrected rule's pre-round resolves both
///   half-steps deterministically: the +eps step stays put and the
///   -eps step commits back up, returning the weight to its starting
///   point every pair regardless of the noise stream. The fast rule's
///   down-step instead keeps a 2^-N chance of slipping one whole
///   spacing — the one-sided leak that compounds into downward drift.
const DRIFT_NUMERATOR: i128 = 3;
const DRIFT_LOG2_DENOMINATOR: i32 = 7;

/// The size of the alternating drift-walk update for a weight format:
/// `3/128` of the spacing at 1.0.
pub fn drift_walk_update(fmt: &FloatFormat) -> Dyadic {
    fmt.ulp_at_exponent(0) * Dyadic::new(DRIFT_NUMERATOR, -DRIFT_LOG2_DENOMINATOR)
}

struct Problem {
    weights: Vec<Dyadic>,
    rows: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

const LINREG_PARAMS: usize = 32;
const LINREG_ROWS: usize = 128;
/// Fixed data seed: the regression data set is part of the problem
/// definition, not of a run's randomness.
const LINREG_DATA_SEED: u64 = 0x5EED_DA7A;

fn uniform_pm1(prng: &mut SplitMix64) -> f64 {
    // 53 uniform bits into [0, 1), then into [-1, 1).
    (prng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

fn build_problem(problem: QatProblem) -> Problem {
    match problem {
        QatProblem::DriftWalk => Problem {
            weights: vec![Dyadic::ONE],
            rows: Vec::new(),
            targets: Vec::new(),
        },
        QatProblem::LinearRegression => {
            let mut prng = SplitMix64::new(LINREG_DATA_SEED);
            let rows: Vec<Vec<f64>> = (0..LINREG_ROWS)
                .map(|_| (0..LINREG_PARAMS).map(|_| uniform_pm1(&mut prng)).collect())
                .collect();
            let w_true: Vec<f64> = (0..LINREG_PARAMS).map(|_| uniform_pm1(&mut prng)).collect();
            let targets = rows
                .iter()
                .map(|row| row.iter().zip(&w_true).map(|(x, w)| x * w).sum())
                .collect();
            Problem {
                weights: vec![Dyadic::ZERO; LINREG_PARAMS],
                rows,
                targets,
            }
        }
    }
}

/// Mean squared error and gradient of the regression problem at the
/// decoded weights.
fn linreg_loss_grad(problem: &Problem, weights_f: &[f64]) -> (f64, Vec<f64>) {
    let n = problem.rows.len() as f64;
    let mut grad = vec![0.0; weights_f.len()];
    let mut loss = 0.0;
    for (row, &target) in problem.rows.iter().zip(&problem.targets) {
        let pred: f64 = row.iter().zip(weights_f).map(|(x, w)| x * w).sum();
        let resid = pred - target;
        loss += resid * resid;
        for (g, &x) in grad.iter_mut().zip(row) {
            *g += 2.0 * resid * x / n;
        }
    }
    (loss / n, grad)
}

fn drift_walk_loss(weights: &[Dyadic]) -> f64 {
    let w = weights[0].to_f64();
    (w - 1.0) * (w - 1.0)
}

fn mean_abs(weights: &[Dyadic]) -> f64 {
    weights.iter().map(|w| w.abs().to_f64()).sum::<f64>() / weights.len() as f64
}

/// Run the training loop: per step, compute the update in high
/// precision, quantize it to `update_precision` significant bits, add
/// it to the decoded weight exactly, and write back through the
/// configured rounding rule.
pub fn run_qat(cfg: &QatConfig) -> Result<QatTrace, Error> {
    cfg.validate()?;
    let fmt = cfg.weight_format;
    let mut problem = build_problem(cfg.problem);
    let mut source = BitSource::seeded(cfg.seed);
    let eps = drift_walk_update(&fmt);

    let loss_of = |problem: &Problem| -> f64 {
        match cfg.problem {
            QatProblem::DriftWalk => drift_walk_loss(&problem.weights),
            QatProblem::LinearRegression => {
                let wf: Vec<f64> = problem.weights.iter().map(|w| w.to_f64()).collect();
                linreg_loss_grad(problem, &wf).0
            }
        }
    };

    let mut records = Vec::with_capacity(cfg.steps + 1);
    records.push(QatStep {
        step: 0,
        loss: loss_of(&problem),
        mean_abs_weight: mean_abs(&problem.weights),
    });
    let mut last_change = 0usize;

    for step in 1..=cfg.steps {
        let updates: Vec<Dyadic> = match cfg.problem {
            QatProblem::DriftWalk => {
                let sign = if (step - 1) % 2 == 0 { eps } else { -eps };
                vec![sign]
            }
            QatProblem::LinearRegression => {
                let wf: Vec<f64> = problem.weights.iter().map(|w| w.to_f64()).collect();
                let (_, grad) = linreg_loss_grad(&problem, &wf);
                grad.iter()
                    .map(|g| {
                        Dyadic::from_f64(-cfg.learning_rate * g)
                            .expect("finite gradient update")
                    })
                    .collect()
            }
        };
        let mut changed = false;
        for (w, u) in problem.weights.iter_mut().zip(updates) {
            let quantized = quantize_significand(u, cfg.update_precision, InnerRound::TiesToEven);
            let next = round(*w + quantized, &fmt, cfg.mode, &mut source);
            if next != *w {
                changed = true;
            }
            *w = next;
        }
        if changed {
            last_change = step;
        }
        records.push(QatStep {
            step,
            loss: loss_of(&problem),
            mean_abs_weight: mean_abs(&problem.weights),
        });
    }

    let final_loss = records.last().unwrap().loss;
    let best_loss = records.iter().map(|r| r.loss).fold(f64::INFINITY, f64::min);
    // Stagnated: no weight changed during the final quarter of the run.
    let stagnated = last_change * 4 <= cfg.steps * 3;
    let diverged = final_loss > 10.0 * best_loss;
    Ok(QatTrace {
        final_loss,
        final_mean_abs_weight: records.last().unwrap().mean_abs_weight,
        records,
        stagnated,
        diverged,
    })
}

/// Run independent replicas of a configuration in parallel, replica
/// `i` seeded with `seed xor i`. Deterministic regardless of the
/// thread count.
pub fn run_qat_replicas(cfg: &QatConfig, replicas: usize) -> Result<Vec<QatTrace>, Error> {
    (0..replicas)
        .into_par_iter()
        .map(|i| {
            let mut c = cfg.clone();
            c.seed = cfg.seed ^ (i as u64);
            run_qat(&c)
        })
        .collect()
}

/// Mean and standard error of the replica mean for a per-replica
/// statistic.
pub fn replica_mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
