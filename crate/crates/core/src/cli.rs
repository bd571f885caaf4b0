//! Command-line surface: argument parsing, key=value config files,
//! and dispatch into the library.
//!
//! Exit codes: 0 on success, 2 for usage errors (unknown flags or
//! subcommands, raised by the parser itself), 1 for runtime errors
//! (unsatisfiable configuration, out-of-range parameters, I/O). Exact
//! results print as a decimal with the reduced fraction `p/2^k`
//! appended whenever it differs from the decimal form. Sweep
//! subcommands emit CSV with a `#`-prefixed preamble echoing the
//! fully-resolved configuration, so identical invocations produce
//! byte-identical files.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bias::{
    bias_closed, bias_enumerated, bias_floor_sum_srf, bias_floor_sum_srff, bias_monte_carlo,
    McConfig, SrVariant,
};
use crate::dyadic::Dyadic;
use crate::experiments::{
    csv_f64, run_figure1, run_figure2, run_qat, Figure1Config, Figure2Config, QatConfig,
    QatProblem, VariantStats,
};
use crate::formats::FloatFormat;
use crate::randbits::BitSource;
use crate::rounding::{round, InnerRound, RoundingSpec};

/// Exact-value display: the decimal expansion, with the reduced
/// fraction appended when it says something the decimal does not
/// (integers and zero print bare).
pub fn exact_line(d: Dyadic) -> String {
    let decimal = d.to_decimal_string();
    let fraction = d.to_fraction_string();
    if decimal == fraction {
        decimal
    } else {
        format!("{decimal} ({fraction})")
    }
}

// ---------------------------------------------------------------------------
// Argument declarations
// ---------------------------------------------------------------------------

#[derive(Parser, Debug)]
#[command(
    name = "fbsr",
    version,
    about = "Few-bit stochastic rounding for parameterized binary floating-point formats",
    propagate_version = true
)]
pub struct Cli {
    /// Line-oriented `key=value` config file; flags override file
    /// values, file values override defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Cap on worker threads for parallel sweeps.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Round one value, printing the exact result once per draw.
    Round(RoundArgs),
    /// Evaluate rounding bias exactly, in closed form, or by Monte
    /// Carlo.
    Bias(BiasArgs),
    /// Uniform-grid bias sweep across one destination binade (CSV).
    Fig1(Fig1Args),
    /// Source-format bias sweep across one destination gap (CSV).
    Fig2(Fig2Args),
    /// Toy low-precision training loop (CSV trace).
    Qat(QatArgs),
    /// List the built-in format presets.
    Formats,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Nearest, ties away from zero.
    Ta,
    /// Nearest, ties to even.
    Tne,
    /// Nearest, ties to odd.
    Tno,
    /// Stochastic, fast form.
    Srff,
    /// Stochastic, offset form.
    Srf,
    /// Stochastic with deterministic pre-correction.
    Src,
}

impl ModeArg {
    fn to_spec(self, bits: u32, inner: InnerRound) -> RoundingSpec {
        match self {
            ModeArg::Ta => RoundingSpec::TiesAway,
            ModeArg::Tne => RoundingSpec::TiesToEven,
            ModeArg::Tno => RoundingSpec::TiesToOdd,
            ModeArg::Srff => RoundingSpec::Srff { bits },
            ModeArg::Srf => RoundingSpec::Srf { bits },
            ModeArg::Src => RoundingSpec::Src { bits, inner },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Srff,
    Srf,
    Src,
}

impl From<VariantArg> for SrVariant {
    fn from(v: VariantArg) -> SrVariant {
        match v {
            VariantArg::Srff => SrVariant::Srff,
            VariantArg::Srf => SrVariant::Srf,
            VariantArg::Src => SrVariant::Src,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InnerArg {
    Tne,
    Tno,
}

impl From<InnerArg> for InnerRound {
    fn from(v: InnerArg) -> InnerRound {
        match v {
            InnerArg::Tne => InnerRound::TiesToEven,
            InnerArg::Tno => InnerRound::TiesToOdd,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Exhaustive enumeration over the excess-precision grid.
    Exact,
    /// Floor-character sum (equals exact enumeration).
    Floorsum,
    /// Closed-form value or bound.
    #[value(alias = "closed")]
    Bound,
    /// Monte Carlo sweep over a source-format grid.
    Mc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    /// Seeded pseudorandom draws.
    Seeded,
    /// Exhaustively cycling counter: draw k yields k mod 2^bits.
    Counter,
    /// A fixed value every draw.
    Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProblemArg {
    /// One weight under alternating zero-mean updates.
    Driftwalk,
    /// Synthetic least-squares gradient descent.
    Linreg,
}

impl From<ProblemArg> for QatProblem {
    fn from(v: ProblemArg) -> QatProblem {
        match v {
            ProblemArg::Driftwalk => QatProblem::DriftWalk,
            ProblemArg::Linreg => QatProblem::LinearRegression,
        }
    }
}

#[derive(Args, Debug, Default)]
pub struct RoundArgs {
    /// Preset format name (see `fbsr formats`).
    #[arg(long, value_name = "NAME")]
    pub format: Option<String>,
    /// Custom format: significand precision in bits (leading bit
    /// included). Requires --bias and --emax.
    #[arg(long, value_name = "P")]
    pub precision: Option<u32>,
    /// Custom format: exponent bias.
    #[arg(long, value_name = "B", allow_negative_numbers = true)]
    pub bias: Option<i32>,
    /// Custom format: maximum biased exponent.
    #[arg(long, value_name = "E")]
    pub emax: Option<u32>,
    /// Rounding rule.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Random bits per stochastic rounding.
    #[arg(long, value_name = "N")]
    pub bits: Option<u32>,
    /// Tie rule for the deterministic pre-correction step.
    #[arg(long, value_enum)]
    pub inner: Option<InnerArg>,
    /// Seed for the seeded bit source.
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// Noise source for stochastic modes.
    #[arg(long, value_enum)]
    pub bit_source: Option<SourceArg>,
    /// Value returned by the fixed bit source (masked to the low
    /// bits).
    #[arg(long, value_name = "V")]
    pub fixed_value: Option<u64>,
    /// Value to round (parsed as binary64).
    #[arg(long, value_name = "X", allow_negative_numbers = true)]
    pub value: Option<f64>,
    /// Number of rounds to perform, one output line each.
    #[arg(long, value_name = "K")]
    pub count: Option<u64>,
}

#[derive(Args, Debug, Default)]
pub struct BiasArgs {
    /// Stochastic rounding variant.
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    /// Random bits per rounding.
    #[arg(long, value_name = "N")]
    pub bits: Option<u32>,
    /// Excess precision of the source values over the destination.
    #[arg(long, value_name = "D")]
    pub excess: Option<u32>,
    /// Source format name (alternative to --excess; implies
    /// D = source precision - destination precision).
    #[arg(long, value_name = "NAME")]
    pub src_format: Option<String>,
    /// Destination format name (pairs with --src-format).
    #[arg(long, value_name = "NAME")]
    pub dst_format: Option<String>,
    /// Evaluation method.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Tie rule for the corrected variant's pre-round.
    #[arg(long, value_enum)]
    pub inner: Option<InnerArg>,
    /// Monte Carlo samples per grid point.
    #[arg(long, value_name = "K")]
    pub samples: Option<u64>,
    /// Monte Carlo seed.
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// CSV output path for Monte Carlo sweeps (columns x,mean,bias).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct Fig1Args {
    /// Random bits per rounding.
    #[arg(long, value_name = "N")]
    pub bits: Option<u32>,
    /// Samples per grid point.
    #[arg(long, value_name = "K")]
    pub samples: Option<u64>,
    /// Grid cells across the binade (a power of two).
    #[arg(long, value_name = "G")]
    pub points: Option<usize>,
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// CSV output path (stdout when omitted).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct Fig2Args {
    /// Random bits per rounding.
    #[arg(long, value_name = "N")]
    pub bits: Option<u32>,
    /// Samples per source value.
    #[arg(long, value_name = "K")]
    pub samples: Option<u64>,
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// CSV output path (stdout when omitted).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct QatArgs {
    /// Training problem.
    #[arg(long, value_enum)]
    pub problem: Option<ProblemArg>,
    /// Write-back rounding rule.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Random bits per stochastic rounding.
    #[arg(long, value_name = "N")]
    pub bits: Option<u32>,
    /// Tie rule for the deterministic pre-correction step.
    #[arg(long, value_enum)]
    pub inner: Option<InnerArg>,
    /// Training steps (default depends on the problem).
    #[arg(long, value_name = "T")]
    pub steps: Option<usize>,
    /// Gradient-descent step size.
    #[arg(long, value_name = "R")]
    pub lr: Option<f64>,
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// Format the weights are stored in.
    #[arg(long, value_name = "NAME")]
    pub weight_format: Option<String>,
    /// Significand bits carried by update arithmetic before the add.
    #[arg(long, value_name = "Q")]
    pub update_precision: Option<u32>,
    /// CSV output path (stdout when omitted).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Config-file resolution
// ---------------------------------------------------------------------------

/// Parse `key=value` lines; `#` starts a comment line and blank lines
/// are skipped. Keys use the long flag names without the dashes.
fn parse_config_text(text: &str, origin: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{origin}:{}: expected key=value, got `{raw}`", idx + 1))?;
        let key = key.trim().to_string();
        ensure!(!key.is_empty(), "{origin}:{}: empty key", idx + 1);
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            bail!("{origin}:{}: duplicate key `{key}`", idx + 1);
        }
    }
    Ok(map)
}

fn load_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    parse_config_text(&text, &path.display().to_string())
}

/// Layered lookup over flags, config-file values, and defaults, with
/// strict unknown-key detection: construction checks every config key
/// against the subcommand's declared vocabulary, so a misspelled key
/// is reported even when resolution would fail for another reason.
#[derive(Debug)]
struct Resolver<'a> {
    values: &'a BTreeMap<String, String>,
    accepted: &'static [&'static str],
    consumed: BTreeSet<&'static str>,
}

impl<'a> Resolver<'a> {
    fn new(
        values: &'a BTreeMap<String, String>,
        accepted: &'static [&'static str],
    ) -> Result<Resolver<'a>> {
        let unknown: Vec<&str> = values
            .keys()
            .map(String::as_str)
            .filter(|k| !accepted.contains(k))
            .collect();
        ensure!(
            unknown.is_empty(),
            "config keys not accepted by this subcommand: {}",
            unknown.join(", ")
        );
        Ok(Resolver {
            values,
            accepted,
            consumed: BTreeSet::new(),
        })
    }

    /// Raw config-file value; marks the key as consumed.
    fn raw(&mut self, key: &'static str) -> Option<&'a str> {
        debug_assert!(
            self.accepted.contains(&key),
            "key `{key}` missing from this subcommand's vocabulary"
        );
        self.consumed.insert(key);
        self.values.get(key).map(String::as_str)
    }

    /// Flag value if set, else the parsed config-file value if
    /// present.
    fn parsed<T: FromStr>(&mut self, key: &'static str, flag: Option<T>) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(key);
        if flag.is_some() {
            return Ok(flag);
        }
        match raw {
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|e| anyhow!("config key `{key}`: invalid value `{s}`: {e}")),
            None => Ok(None),
        }
    }

    /// Like `parsed`, for enumerated flag values (accepts the same
    /// spellings as the command line, case-insensitively).
    fn pick<T: ValueEnum>(&mut self, key: &'static str, flag: Option<T>) -> Result<Option<T>> {
        let raw = self.raw(key);
        if flag.is_some() {
            return Ok(flag);
        }
        match raw {
            Some(s) => T::from_str(s, true).map(Some).map_err(|_| {
                let names: Vec<&str> = T::value_variants()
                    .iter()
                    .filter_map(|v| v.to_possible_value())
                    .map(|p| p.get_name().to_owned().leak() as &str)
                    .collect();
                anyhow!(
                    "config key `{key}`: unknown value `{s}` (expected one of: {})",
                    names.join(", ")
                )
            }),
            None => Ok(None),
        }
    }

}

fn require<T>(key: &'static str, value: Option<T>) -> Result<T> {
    value.ok_or_else(|| anyhow!("missing --{key}: pass the flag or set `{key}` in --config"))
}

// ---------------------------------------------------------------------------
// Resolved plans
// ---------------------------------------------------------------------------

#[derive(Debug)]
struct RoundPlan {
    format: FloatFormat,
    spec: RoundingSpec,
    source: BitSource,
    value: Dyadic,
    count: u64,
}

/// Config keys the `round` subcommand accepts (kept in sync with the
/// resolver below by the debug assertion in [`Resolver::raw`] and the
/// vocabulary unit test).
const ROUND_KEYS: &[&str] = &[
    "format",
    "precision",
    "bias",
    "emax",
    "mode",
    "bits",
    "inner",
    "seed",
    "fixed-value",
    "bit-source",
    "value",
    "count",
];

fn resolve_round(a: RoundArgs, r: &mut Resolver) -> Result<RoundPlan> {
    let name = r.parsed("format", a.format)?;
    let precision = r.parsed("precision", a.precision)?;
    let bias = r.parsed("bias", a.bias)?;
    let emax = r.parsed("emax", a.emax)?;
    let format = match (name, precision, bias, emax) {
        (Some(n), None, None, None) => FloatFormat::from_name(&n)?,
        (None, Some(p), Some(b), Some(e)) => FloatFormat::new(p, b, e)?,
        (None, None, None, None) => {
            bail!("missing format: pass --format <preset> or all of --precision/--bias/--emax")
        }
        (Some(_), _, _, _) => {
            bail!("--format conflicts with --precision/--bias/--emax; pass one or the other")
        }
        _ => bail!("custom formats need all three of --precision, --bias, and --emax"),
    };
    let mode = require("mode", r.pick("mode", a.mode)?)?;
    let bits = r.parsed("bits", a.bits)?.unwrap_or(3);
    let inner: InnerRound = r.pick("inner", a.inner)?.unwrap_or(InnerArg::Tne).into();
    let spec = mode.to_spec(bits, inner);
    spec.validate()?;
    let seed = r.parsed("seed", a.seed)?.unwrap_or(1);
    let fixed = r.parsed("fixed-value", a.fixed_value)?.unwrap_or(0);
    let source = match r
        .pick("bit-source", a.bit_source)?
        .unwrap_or(SourceArg::Seeded)
    {
        SourceArg::Seeded => BitSource::seeded(seed),
        SourceArg::Counter => BitSource::counter(),
        SourceArg::Fixed => BitSource::fixed(fixed),
    };
    let raw = require("value", r.parsed("value", a.value)?)?;
    let value = Dyadic::from_f64(raw).ok_or_else(|| anyhow!("--value must be finite"))?;
    let count = r.parsed("count", a.count)?.unwrap_or(1);
    Ok(RoundPlan {
        format,
        spec,
        source,
        value,
        count,
    })
}

impl RoundPlan {
    fn execute(mut self) -> Result<()> {
        let stdout = io::stdout();
        let mut out = stdout.lock();
        for _ in 0..self.count {
            let rounded = round(self.value, &self.format, self.spec, &mut self.source);
            writeln!(out, "{}", exact_line(rounded))?;
        }
        Ok(())
    }
}

enum BiasPlan {
    Exact {
        variant: SrVariant,
        bits: u32,
        excess: u32,
        inner: InnerRound,
    },
    FloorSum {
        variant: SrVariant,
        bits: u32,
        excess: u32,
    },
    Bound {
        variant: SrVariant,
        bits: u32,
        excess: Option<u32>,
    },
    Mc {
        config: McConfig,
        out: Option<PathBuf>,
    },
}

/// Config keys the `bias` subcommand accepts.
const BIAS_KEYS: &[&str] = &[
    "variant",
    "bits",
    "inner",
    "method",
    "excess",
    "src-format",
    "dst-format",
    "samples",
    "seed",
    "out",
];

fn resolve_bias(a: BiasArgs, r: &mut Resolver) -> Result<BiasPlan> {
    let variant: SrVariant = require("variant", r.pick("variant", a.variant)?)?.into();
    let bits = r.parsed("bits", a.bits)?.unwrap_or(3);
    let inner: InnerRound = r.pick("inner", a.inner)?.unwrap_or(InnerArg::Tne).into();
    let method = r.pick("method", a.method)?.unwrap_or(MethodArg::Exact);
    let excess_flag = r.parsed::<u32>("excess", a.excess)?;
    let src_name = r.parsed::<String>("src-format", a.src_format)?;
    let dst_name = r.parsed::<String>("dst-format", a.dst_format)?;
    let samples = r.parsed("samples", a.samples)?.unwrap_or(10_000);
    let seed = r.parsed("seed", a.seed)?.unwrap_or(1);
    let out = r.parsed("out", a.out)?;

    let formats = match (src_name, dst_name) {
        (Some(s), Some(d)) => Some((FloatFormat::from_name(&s)?, FloatFormat::from_name(&d)?)),
        (None, None) => None,
        _ => bail!("pass both --src-format and --dst-format, or neither"),
    };
    ensure!(
        excess_flag.is_none() || formats.is_none(),
        "--excess conflicts with --src-format/--dst-format"
    );
    let format_excess = formats
        .map(|(s, d)| {
            ensure!(
                s.precision() > d.precision(),
                "source precision {} must exceed destination precision {}",
                s.precision(),
                d.precision()
            );
            Ok(s.precision() - d.precision())
        })
        .transpose()?;
    let excess = excess_flag.or(format_excess);
    if out.is_some() && method != MethodArg::Mc {
        bail!("--out applies only to --method mc");
    }

    let need_excess = |excess: Option<u32>, method: &str| {
        excess.ok_or_else(|| {
            anyhow!("--method {method} needs --excess or a --src-format/--dst-format pair")
        })
    };
    Ok(match method {
        MethodArg::Exact => BiasPlan::Exact {
            variant,
            bits,
            excess: need_excess(excess, "exact")?,
            inner,
        },
        MethodArg::Floorsum => {
            ensure!(
                variant != SrVariant::Src,
                "the corrected variant has no floor-sum form; use --method exact"
            );
            BiasPlan::FloorSum {
                variant,
                bits,
                excess: need_excess(excess, "floorsum")?,
            }
        }
        MethodArg::Bound => BiasPlan::Bound {
            variant,
            bits,
            excess,
        },
        MethodArg::Mc => {
            let (src, dst) = formats.ok_or_else(|| {
                anyhow!("--method mc sweeps a source format; pass --src-format and --dst-format")
            })?;
            BiasPlan::Mc {
                config: McConfig {
                    variant,
                    inner,
                    random_bits: bits,
                    src_format: Some(src),
                    dst_format: dst,
                    lo: Dyadic::ONE,
                    hi: Dyadic::from_int(2),
                    grid_points: 0,
                    samples_per_point: samples,
                    seed,
                },
                out,
            }
        }
    })
}

impl BiasPlan {
    fn execute(self) -> Result<()> {
        match self {
            BiasPlan::Exact {
                variant,
                bits,
                excess,
                inner,
            } => {
                let result = bias_enumerated(variant, bits, excess, inner)?;
                println!("{}", exact_line(result.value));
            }
            BiasPlan::FloorSum {
                variant,
                bits,
                excess,
            } => {
                let result = match variant {
                    SrVariant::Srff => bias_floor_sum_srff(bits, excess)?,
                    SrVariant::Srf => bias_floor_sum_srf(bits, excess)?,
                    SrVariant::Src => unreachable!("rejected during resolution"),
                };
                println!("{}", exact_line(result.value));
            }
            BiasPlan::Bound {
                variant,
                bits,
                excess,
            } => {
                let result = bias_closed(variant, bits, excess)?;
                println!("{}", exact_line(result.value));
            }
            BiasPlan::Mc { config, out } => {
                let sweep = bias_monte_carlo(&config)?;
                println!(
                    "{} +/- {}",
                    csv_f64(sweep.avg_bias_ulp),
                    csv_f64(sweep.stderr_ulp)
                );
                if let Some(path) = out {
                    let mut sink = file_sink(&path)?;
                    let src = config.src_format.expect("mc plans carry a source format");
                    for (key, value) in [
                        ("command", "bias".to_string()),
                        ("variant", config.variant.name().to_string()),
                        ("method", "mc".to_string()),
                        ("bits", config.random_bits.to_string()),
                        ("inner", inner_name(config.inner).to_string()),
                        ("src-format", format_label(&src)),
                        ("dst-format", format_label(&config.dst_format)),
                        ("samples", config.samples_per_point.to_string()),
                        ("seed", config.seed.to_string()),
                        ("lo", config.lo.to_decimal_string()),
                        ("hi", config.hi.to_decimal_string()),
                    ] {
                        writeln!(sink, "# {key}={value}")?;
                    }
                    writeln!(sink, "x,mean,bias")?;
                    for p in &sweep.points {
                        writeln!(
                            sink,
                            "{},{},{}",
                            csv_f64(p.x),
                            csv_f64(p.mean_rounded),
                            csv_f64(p.bias)
                        )?;
                    }
                    sink.flush()?;
                }
            }
        }
        Ok(())
    }
}

fn inner_name(inner: InnerRound) -> &'static str {
    match inner {
        InnerRound::TiesToEven => "tne",
        InnerRound::TiesToOdd => "tno",
    }
}

/// Preset name when the format is one, else its parameter triple.
fn format_label(fmt: &FloatFormat) -> String {
    for name in FloatFormat::preset_names() {
        if FloatFormat::from_name(name).expect("preset names resolve") == *fmt {
            return name.to_string();
        }
    }
    format!(
        "custom(precision={},bias={},emax={})",
        fmt.precision(),
        fmt.exp_bias(),
        fmt.max_biased_exp()
    )
}

/// Config keys the `fig1` subcommand accepts.
const FIG1_KEYS: &[&str] = &["bits", "samples", "points", "seed", "out"];

fn resolve_fig1(a: Fig1Args, r: &mut Resolver) -> Result<(Figure1Config, Option<PathBuf>)> {
    let d = Figure1Config::default();
    let cfg = Figure1Config {
        random_bits: r.parsed("bits", a.bits)?.unwrap_or(d.random_bits),
        samples_per_point: r
            .parsed("samples", a.samples)?
            .unwrap_or(d.samples_per_point),
        grid_points: r.parsed("points", a.points)?.unwrap_or(d.grid_points),
        seed: r.parsed("seed", a.seed)?.unwrap_or(d.seed),
    };
    Ok((cfg, r.parsed("out", a.out)?))
}

/// Config keys the `fig2` subcommand accepts.
const FIG2_KEYS: &[&str] = &["bits", "samples", "seed", "out"];

fn resolve_fig2(a: Fig2Args, r: &mut Resolver) -> Result<(Figure2Config, Option<PathBuf>)> {
    let d = Figure2Config::default();
    let cfg = Figure2Config {
        random_bits: r.parsed("bits", a.bits)?.unwrap_or(d.random_bits),
        samples_per_point: r
            .parsed("samples", a.samples)?
            .unwrap_or(d.samples_per_point),
        seed: r.parsed("seed", a.seed)?.unwrap_or(d.seed),
    };
    Ok((cfg, r.parsed("out", a.out)?))
}

/// Config keys the `qat` subcommand accepts.
const QAT_KEYS: &[&str] = &[
    "problem",
    "mode",
    "bits",
    "inner",
    "steps",
    "lr",
    "seed",
    "weight-format",
    "update-precision",
    "out",
];

fn resolve_qat(a: QatArgs, r: &mut Resolver) -> Result<(QatConfig, Option<PathBuf>)> {
    let problem: QatProblem = r
        .pick("problem", a.problem)?
        .unwrap_or(ProblemArg::Driftwalk)
        .into();
    let mode = r.pick("mode", a.mode)?.unwrap_or(ModeArg::Srff);
    let bits = r.parsed("bits", a.bits)?.unwrap_or(3);
    let inner: InnerRound = r.pick("inner", a.inner)?.unwrap_or(InnerArg::Tne).into();
    let base = QatConfig::new(problem, mode.to_spec(bits, inner));
    let weight_format = match r.parsed::<String>("weight-format", a.weight_format)? {
        Some(name) => FloatFormat::from_name(&name)?,
        None => base.weight_format,
    };
    let cfg = QatConfig {
        weight_format,
        update_precision: r
            .parsed("update-precision", a.update_precision)?
            .unwrap_or(base.update_precision),
        steps: r.parsed("steps", a.steps)?.unwrap_or(base.steps),
        learning_rate: r.parsed("lr", a.lr)?.unwrap_or(base.learning_rate),
        seed: r.parsed("seed", a.seed)?.unwrap_or(base.seed),
        ..base
    };
    Ok((cfg, r.parsed("out", a.out)?))
}

// ---------------------------------------------------------------------------
// Output plumbing
// ---------------------------------------------------------------------------

fn file_sink(path: &Path) -> Result<Box<dyn Write>> {
    let file =
        File::create(path).with_context(|| format!("creating output file {}", path.display()))?;
    Ok(Box::new(BufWriter::new(file)))
}

/// CSV destination plus the stream for human-readable summary lines:
/// when the CSV goes to stdout, summaries move to stderr so the CSV
/// stays machine-readable.
fn split_outputs(path: &Option<PathBuf>) -> Result<(Box<dyn Write>, Box<dyn Write>)> {
    match path {
        Some(p) => Ok((file_sink(p)?, Box::new(io::stdout().lock()))),
        None => Ok((
            Box::new(io::stdout().lock()),
            Box::new(io::stderr().lock()),
        )),
    }
}

fn write_stats_line(dest: &mut dyn Write, stats: &VariantStats) -> io::Result<()> {
    writeln!(
        dest,
        "{}: avg_bias_ulp={} stderr={} reference={}",
        stats.variant.name(),
        csv_f64(stats.avg_bias_ulp),
        csv_f64(stats.stderr_ulp),
        exact_line(stats.reference)
    )
}

fn run_fig1(cfg: Figure1Config, out: Option<PathBuf>) -> Result<()> {
    let result = run_figure1(&cfg)?;
    let (mut csv, mut summary) = split_outputs(&out)?;
    result.write_csv(&mut csv, &cfg)?;
    csv.flush()?;
    write_stats_line(&mut summary, &result.srff)?;
    write_stats_line(&mut summary, &result.srf)?;
    Ok(())
}

fn run_fig2(cfg: Figure2Config, out: Option<PathBuf>) -> Result<()> {
    let result = run_figure2(&cfg)?;
    let (mut csv, mut summary) = split_outputs(&out)?;
    result.write_csv(&mut csv, &cfg)?;
    csv.flush()?;
    for stats in &result.stats {
        write_stats_line(&mut summary, stats)?;
    }
    Ok(())
}

fn run_qat_cmd(cfg: QatConfig, out: Option<PathBuf>) -> Result<()> {
    for warning in cfg.warnings() {
        eprintln!("warning: {warning}");
    }
    let trace = run_qat(&cfg)?;
    let (mut csv, mut summary) = split_outputs(&out)?;
    trace.write_csv(&mut csv, &cfg)?;
    csv.flush()?;
    writeln!(
        summary,
        "final_loss={} final_mean_abs_weight={} stagnated={} diverged={}",
        csv_f64(trace.final_loss),
        csv_f64(trace.final_mean_abs_weight),
        trace.stagnated,
        trace.diverged
    )?;
    Ok(())
}

fn run_formats() -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(
        out,
        "{:<10} {:>9} {:>6} {:>6} {:>7}  max-finite",
        "name", "precision", "bias", "emax", "values"
    )?;
    for name in FloatFormat::preset_names() {
        let fmt = FloatFormat::from_name(name)?;
        let count = fmt.enumerate_finite()?.len();
        writeln!(
            out,
            "{:<10} {:>9} {:>6} {:>6} {:>7}  {}",
            name,
            fmt.precision(),
            fmt.exp_bias(),
            fmt.max_biased_exp(),
            count,
            exact_line(fmt.max_finite())
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Run a parsed invocation. Errors map to exit status 1 in `main`.
pub fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        ensure!(threads >= 1, "--threads must be at least 1");
        // A second initialization (e.g. in-process tests) is harmless:
        // the first pool wins.
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .ok();
    }
    let file_values = match &cli.config {
        Some(path) => load_config(path)?,
        None => BTreeMap::new(),
    };
    match cli.command {
        Command::Round(a) => {
            let mut r = Resolver::new(&file_values, ROUND_KEYS)?;
            resolve_round(a, &mut r)?.execute()
        }
        Command::Bias(a) => {
            let mut r = Resolver::new(&file_values, BIAS_KEYS)?;
            resolve_bias(a, &mut r)?.execute()
        }
        Command::Fig1(a) => {
            let mut r = Resolver::new(&file_values, FIG1_KEYS)?;
            let (cfg, out) = resolve_fig1(a, &mut r)?;
            run_fig1(cfg, out)
        }
        Command::Fig2(a) => {
            let mut r = Resolver::new(&file_values, FIG2_KEYS)?;
            let (cfg, out) = resolve_fig2(a, &mut r)?;
            run_fig2(cfg, out)
        }
        Command::Qat(a) => {
            let mut r = Resolver::new(&file_values, QAT_KEYS)?;
            let (cfg, out) = resolve_qat(a, &mut r)?;
            run_qat_cmd(cfg, out)
        }
        Command::Formats => {
            // No config keys apply; reject any that were supplied.
            Resolver::new(&file_values, &[])?;
            run_formats()
        }
    }
}
