use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gasmf::filter::Variant;

#[derive(Debug, Parser)]
#[command(
    name = "gasmf",
    version,
    about = "Matched-filter trace gas retrieval for imaging spectrometer cubes"
)]
pub struct Cli {
    /// Worker threads: a positive count or "auto"
    #[arg(long, global = true, env = "GASMF_THREADS", default_value = "auto")]
    pub threads: Threads,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Retrieve an enhancement map from a radiance cube
    Retrieve(RetrieveArgs),
    /// Generate a validation scene with known enhancement
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Score retrieved maps against truth or background regions
    Evaluate(EvaluateArgs),
    /// Fit a unit absorption spectrum from a radiative transfer lookup table
    TargetGen(TargetGenArgs),
    /// Re-run a command from its manifest and check the outputs match
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Threads {
    Auto,
    Count(usize),
}

impl FromStr for Threads {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(Threads::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Threads::Count(n)),
            _ => Err(format!("'{s}' is not a positive thread count or 'auto'")),
        }
    }
}

impl Threads {
    pub fn resolve(self) -> usize {
        match self {
            Threads::Count(n) => n,
            Threads::Auto => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        }
    }
}

/// Partition width in detector columns, or every column at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    All,
    Columns(usize),
}

impl FromStr for Group {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "all" {
            return Ok(Group::All);
        }
        s.parse::<usize>()
            .map(Group::Columns)
            .map_err(|_| format!("'{s}' is not a column count or 'all'"))
    }
}

/// Two comma-separated numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair(pub f64, pub f64);

impl FromStr for Pair {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| format!("'{s}' is not of the form a,b"))?;
        let p = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("'{v}' is not a number"));
        Ok(Pair(p(a)?, p(b)?))
    }
}

/// Savitzky-Golay `width,degree`, or `none`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Smoothing(pub Option<(usize, usize)>);

impl FromStr for Smoothing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "none" {
            return Ok(Smoothing(None));
        }
        let (w, d) = s
            .split_once(',')
            .ok_or_else(|| format!("'{s}' is not width,degree or none"))?;
        let p = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| format!("'{v}' is not a whole number"))
        };
        Ok(Smoothing(Some((p(w)?, p(d)?))))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    /// Radiance cube: the ENVI header or its binary file
    pub radiance: PathBuf,
    /// Unit absorption spectrum CSV (wavelength_nm, unit_absorption_per_ppm_m)
    #[arg(long)]
    pub target: PathBuf,
    /// Filter variant: rmf, albedo-mf, iter-pos, iter-pos-albedo, rwl1 or albedo-rwl1
    #[arg(long, default_value = "albedo-rwl1", value_parser = parse_variant)]
    pub variant: Variant,
    /// Adjacent detector columns per partition, or "all"
    #[arg(long, default_value = "5")]
    pub group: Group,
    #[arg(long, default_value_t = gasmf::filter::DEFAULT_ITERATIONS)]
    pub iters: usize,
    /// Reweighting stabilizer, ppm m
    #[arg(long, default_value_t = gasmf::filter::DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Spectral window lo,hi in nm
    #[arg(long)]
    pub window: Option<Pair>,
    /// Also write per-partition diagnostics
    #[arg(long)]
    pub diagnostics: bool,
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Output file prefix (default: <cube stem>_<variant>)
    #[arg(long)]
    pub name: Option<String>,
    /// Arithmetic precision of the retrieval
    #[arg(long, value_enum, default_value = "f64")]
    pub precision: Precision,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse::<Variant>().map_err(|e| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum SimulateCommand {
    /// Enhance a random fraction of pixels by uniform draws
    Random(RandomArgs),
    /// Enhance a Gaussian plume downwind of a source
    Plume(PlumeArgs),
}

#[derive(Debug, Args)]
pub struct SceneArgs {
    /// Base radiance cube header
    #[arg(long, conflicts_with = "flat")]
    pub base: Option<PathBuf>,
    /// Use the built-in flat-plus-textured synthetic base instead of --base
    #[arg(long)]
    pub flat: bool,
    #[arg(long, default_value_t = 200)]
    pub lines: usize,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 50)]
    pub bands: usize,
    /// Wavelength range of the synthetic base, lo,hi nm
    #[arg(long, default_value = "2080,2450")]
    pub wavelengths: Pair,
    /// Savitzky-Golay smoothing of the base: width,degree or none
    #[arg(long, default_value = "none")]
    pub smooth: Smoothing,
    /// Noise coefficients a,c for std = a sqrt(L) + c, in radiance units
    #[arg(long, default_value = "0.0025,0.0025")]
    pub noise: Pair,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Unit absorption spectrum CSV (default: built-in synthetic methane)
    #[arg(long)]
    pub target: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Output file prefix
    #[arg(long, default_value = "scene")]
    pub name: String,
    /// Sample type of the written cube
    #[arg(long, value_enum, default_value = "f32")]
    pub data_type: Precision,
}

#[derive(Debug, Args)]
pub struct RandomArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Fraction of pixels to enhance
    #[arg(long, default_value_t = 0.01)]
    pub fraction: f64,
    /// Largest enhancement, ppm m
    #[arg(long, default_value_t = 10000.0)]
    pub max: f64,
}

#[derive(Debug, Args)]
pub struct PlumeArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Source pixel line,sample
    #[arg(long)]
    pub source: Pair,
    /// Enhancement at the source, ppm m
    #[arg(long, default_value_t = 5000.0)]
    pub peak: f64,
    /// Downwind decay length, pixels
    #[arg(long, default_value_t = 20.0)]
    pub sigma_along: f64,
    /// Crosswind decay length, pixels
    #[arg(long, default_value_t = 4.0)]
    pub sigma_cross: f64,
    /// Downwind direction in degrees (0: increasing sample, 90: increasing line)
    #[arg(long, default_value_t = 0.0)]
    pub azimuth: f64,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Retrieved map header, optionally as name=path; repeatable
    #[arg(long, required = true)]
    pub retrieved: Vec<String>,
    /// Truth map header
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Name of a retrieved map, or a map path, to measure improvement against
    #[arg(long)]
    pub reference: Option<String>,
    /// Background region name:x0,y0,x1,y1 (samples x, lines y, upper bounds exclusive); repeatable
    #[arg(long)]
    pub roi: Vec<String>,
    /// Background region from a raster, name=path (nonzero pixels are inside); repeatable
    #[arg(long)]
    pub roi_mask: Vec<String>,
    /// Truth threshold for the enhanced-pixel regression, ppm m
    #[arg(long, default_value_t = gasmf::eval::DEFAULT_REGRESSION_THRESHOLD)]
    pub threshold: f64,
    /// Histogram bin width, ppm m
    #[arg(long, default_value_t = 50.0)]
    pub bin_width: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TargetGenArgs {
    /// Band-resolved lookup CSV (enhancement_ppm_m, <wavelengths...>)
    #[arg(long, conflicts_with_all = ["hires", "srf"])]
    pub lookup: Option<PathBuf>,
    /// High-resolution lookup CSV (wavelength_nm, <enhancements...>)
    #[arg(long, requires = "srf")]
    pub hires: Option<PathBuf>,
    /// Instrument response CSV (center_nm, fwhm_nm)
    #[arg(long, requires = "hires")]
    pub srf: Option<PathBuf>,
    #[arg(long, default_value = "unit_absorption.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}
