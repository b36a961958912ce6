use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ffic_core::fading::Method;
use ffic_core::regions::{GridPoint, SweepInner};
use ffic_core::{McConfig, Shape};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "ffic", version, about = "Jensen's-gap certified capacity bounds for fast-fading interference channels")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    /// Print the equivalent run configuration as JSON instead of running.
    #[arg(long, global = true)]
    pub dump_config: bool,
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Common {
    /// Monte Carlo sample count.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    pub samples: u64,
    /// Base seed of the random streams.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Independent stream partitions; changes the sampling layout.
    #[arg(long, global = true, default_value_t = 1)]
    pub partitions: u32,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Output format; each command has a natural default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

impl Default for Common {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            seed: 42,
            partitions: 1,
            output: None,
            format: None,
        }
    }
}

impl Common {
    pub fn mc(&self) -> McConfig {
        McConfig::new(self.samples, self.seed).with_partitions(self.partitions)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Logarithmic Jensen's gap of a fading law, closed form and numeric.
    JensenGap(JensenGapArgs),
    /// Evaluate one rate region and emit its constraints.
    Region(RegionArgs),
    /// Certify a constant-gap theorem over a grid of channels.
    GapCheck(GapCheckArgs),
    /// Symmetric-rate sweep of the non-feedback bounds.
    Sweep(SweepArgs),
    /// n-phase amplify-and-forward scheme.
    #[command(subcommand)]
    Af(AfCommand),
    /// Capacity sandwich of the two-tap fading ISI channel.
    Isi(IsiArgs),
    /// Run a saved configuration.
    #[serde(skip)]
    Run(RunArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
}

/// A complete, replayable invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub common: Common,
    #[serde(flatten)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeName {
    Rayleigh,
    Gamma,
    Nakagami,
    Weibull,
    Deterministic,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ShapeArgs {
    /// Fading law of the power gains.
    #[arg(long, value_enum, default_value_t = ShapeName::Rayleigh)]
    pub shape: ShapeName,
    /// Shape parameter for gamma, nakagami and weibull.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    /// Shorthand for `--shape deterministic`.
    #[arg(long)]
    #[serde(default)]
    pub deterministic: bool,
}

impl ShapeArgs {
    pub fn shape(&self) -> Result<Shape, String> {
        if self.deterministic {
            return Ok(Shape::Deterministic);
        }
        let k = || self.k.ok_or_else(|| format!("--k is required for {:?}", self.shape));
        Ok(match self.shape {
            ShapeName::Rayleigh => Shape::Rayleigh,
            ShapeName::Gamma | ShapeName::Nakagami => Shape::Gamma { k: k()? },
            ShapeName::Weibull => Shape::Weibull { k: k()? },
            ShapeName::Deterministic => Shape::Deterministic,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Quadrature,
    Mc,
}

impl From<MethodName> for Method {
    fn from(m: MethodName) -> Self {
        match m {
            MethodName::Quadrature => Method::Quadrature,
            MethodName::Mc => Method::MonteCarlo,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct JensenGapArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub shape: ShapeArgs,
    /// Fading model as JSON (overrides --shape), e.g. a tabulated density.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub mean_power: f64,
    #[arg(long, value_enum, default_value_t = MethodName::Quadrature)]
    pub method: MethodName,
    /// Skip the ξ(a) curve and report only the gap at a = 0.
    #[arg(long)]
    #[serde(default)]
    pub no_curve: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionName {
    NofbInner,
    NofbOuter,
    NofbExact,
    FbInner,
    FbOuter,
    ImacInner,
    ImacOuter,
    StaticInner,
    StaticOuter,
    NphaseOuter,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ChannelArgs {
    #[arg(long)]
    pub snr: f64,
    #[arg(long)]
    pub inr: f64,
    /// Mean power of g22 if it differs from --snr.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr2: Option<f64>,
    /// Mean power of g21 if it differs from --inr.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inr2: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub shape: ShapeArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RegionArgs {
    #[arg(long, value_enum)]
    pub kind: RegionName,
    #[command(flatten)]
    #[serde(flatten)]
    pub channel: ChannelArgs,
    /// Feedback correlation magnitude.
    #[arg(long, default_value_t = 0.0)]
    #[serde(default)]
    pub rho: f64,
    /// Feedback rotation angle in radians.
    #[arg(long, default_value_t = 0.0)]
    #[serde(default)]
    pub theta: f64,
    /// Use the feedback templates for static regions.
    #[arg(long)]
    #[serde(default)]
    pub feedback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    Nofb,
    Fb,
    Imac,
    StaticNofb,
    StaticFb,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GapCheckArgs {
    #[arg(long, value_enum)]
    pub kind: CheckName,
    #[command(flatten)]
    #[serde(flatten)]
    pub shape: ShapeArgs,
    /// `default` or a comma-separated list of SNR:ALPHA points.
    #[arg(long, default_value = "default")]
    pub grid: String,
    /// Feedback correlation magnitudes (fb and static-fb).
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.3, 0.7, 0.95])]
    pub rho: Vec<f64>,
    /// Jensen's gap constant; defaults to the shape's closed form.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_jg: Option<f64>,
}

impl GapCheckArgs {
    pub fn grid_points(&self) -> Result<Vec<GridPoint>, String> {
        parse_grid(&self.grid)
    }
}

pub fn parse_grid(s: &str) -> Result<Vec<GridPoint>, String> {
    if s == "default" {
        return Ok(ffic_core::regions::standard_grid());
    }
    s.split(',')
        .map(|p| {
            let (snr, alpha) = p
                .split_once(':')
                .ok_or_else(|| format!("grid point {p:?} is not SNR:ALPHA"))?;
            let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
            Ok(GridPoint {
                snr: num(snr)?,
                alpha: num(alpha)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerName {
    Exact,
    Simplified,
}

impl From<InnerName> for SweepInner {
    fn from(i: InnerName) -> Self {
        match i {
            InnerName::Exact => SweepInner::Exact,
            InnerName::Simplified => SweepInner::Simplified,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0])]
    pub snr_db: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub shape: ShapeArgs,
    #[arg(long, value_enum, default_value_t = InnerName::Exact)]
    pub inner: InnerName,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SymArgs {
    #[arg(long, default_value_t = 100.0)]
    pub snr: f64,
    #[arg(long, default_value_t = 10.0)]
    pub inr: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub shape: ShapeArgs,
    /// Jensen's gap constant; defaults to the shape's closed form.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_jg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "sub", rename_all = "kebab-case")]
pub enum AfCommand {
    /// User-1 rate against its lower bound for several phase counts.
    R1 {
        #[command(flatten)]
        #[serde(flatten)]
        sym: SymArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [64usize])]
        n: Vec<usize>,
    },
    /// User-2 rate of the refinement chain.
    R2 {
        #[command(flatten)]
        #[serde(flatten)]
        sym: SymArgs,
    },
    /// Corner points of the scheme against the outer pentagon.
    Corners {
        #[command(flatten)]
        #[serde(flatten)]
        sym: SymArgs,
    },
    /// Exactness of Rx2's telescoping combination.
    Cancellation {
        #[command(flatten)]
        #[serde(flatten)]
        sym: SymArgs,
        #[arg(long, default_value_t = 8)]
        n: usize,
        /// Symbols per phase.
        #[arg(long = "block-len", short = 'N', default_value_t = 16)]
        block_len: usize,
        /// Disable the receiver noise.
        #[arg(long)]
        #[serde(default)]
        noiseless: bool,
    },
    /// Growth of tridiagonal Toeplitz determinants.
    Tridiag {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long, default_value_t = 200)]
        n: usize,
    },
    /// Fading determinant against its plug-in value.
    Lemma4 {
        #[command(flatten)]
        #[serde(flatten)]
        sym: SymArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [8usize, 32, 64])]
        n: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct IsiArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub sym: SymArgs,
    /// Also estimate the achievable rate with this many symbols (0 skips it).
    #[arg(long, default_value_t = 128)]
    pub n: usize,
}
