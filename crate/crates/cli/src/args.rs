use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fgbd_core::noise::{TailDivisor, TailRule};
use fgbd_core::{CriterionMode, FilterConfig, PlyFormat};

#[derive(Debug, Parser)]
#[command(name = "fgbd", version, about = "Fast graph-based denoising of point-cloud colours")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Denoise one PLY file or a directory of frames.
    Denoise(DenoiseArgs),
    /// Add clipped Gaussian noise to the colours.
    AddNoise(AddNoiseArgs),
    /// Estimate the colour noise level.
    EstimateNoise(EstimateArgs),
    /// Colour PSNR between two clouds with the same point order.
    Psnr(PsnrArgs),
    /// Write a deterministic synthetic cloud.
    GenSynthetic(GenArgs),
    /// Time scan-line graph construction against brute-force 6-NN.
    BenchGraph(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Ascii,
    Binary,
}

impl From<Format> for PlyFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Ascii => PlyFormat::Ascii,
            Format::Binary => PlyFormat::BinaryLittleEndian,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TailRuleArg {
    /// Smallest m whose tail mean exceeds the tail median.
    Exceeding,
    /// Smallest m whose tail mean no longer exceeds the tail median.
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DivisorArg {
    /// Tail mean over D - m values.
    Length,
    /// Tail sum over D - m + 1.
    LengthPlusOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    Pooled,
    PerChannel,
}

/// Noise-estimation options shared by `denoise` and `estimate-noise`.
#[derive(Debug, Clone, Args)]
pub struct EstimationArgs {
    /// Patch length D (query point plus D-1 neighbours).
    #[arg(long, default_value_t = 7)]
    pub patch_size: usize,
    #[arg(long, value_enum, default_value_t = TailRuleArg::Exceeding)]
    pub tail_rule: TailRuleArg,
    #[arg(long, value_enum, default_value_t = DivisorArg::Length)]
    pub tail_divisor: DivisorArg,
}

impl EstimationArgs {
    pub fn tail_rule(&self) -> TailRule {
        match self.tail_rule {
            TailRuleArg::Exceeding => TailRule::FirstExceeding,
            TailRuleArg::Balanced => TailRule::FirstBalanced,
        }
    }

    pub fn tail_divisor(&self) -> TailDivisor {
        match self.tail_divisor {
            DivisorArg::Length => TailDivisor::TailLength,
            DivisorArg::LengthPlusOne => TailDivisor::TailLengthPlusOne,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DenoiseArgs {
    /// PLY file, or a directory whose .ply files form a frame sequence.
    pub input: PathBuf,
    /// Output file, or output directory for a sequence.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Bit depth; quantizes float clouds and overrides the inferred depth.
    #[arg(long)]
    pub bits: Option<u32>,
    #[arg(long, default_value_t = 64)]
    pub qmax: usize,
    /// Frames between full noise estimations.
    #[arg(long, default_value_t = 10)]
    pub interval: usize,
    /// Disable region-limited filter selection.
    #[arg(long)]
    pub no_fslr: bool,
    #[command(flatten)]
    pub estimation: EstimationArgs,
    #[arg(long, value_enum, default_value_t = CriterionArg::Pooled)]
    pub criterion: CriterionArg,
    /// Scan every q up to qmax instead of stopping after three increases.
    #[arg(long)]
    pub exhaustive: bool,
    /// Add noise of this level to each input before denoising; the clean
    /// input then serves as ground truth.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Noise seed for --sigma; frame f uses seed + f.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Clean reference (file, or directory with matching file names).
    #[arg(long)]
    pub ground_truth: Option<PathBuf>,
    /// Process frames that reuse q in parallel.
    #[arg(long)]
    pub parallel: bool,
    /// Manifest path (default: next to the output).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Binary)]
    pub format: Format,
}

impl DenoiseArgs {
    pub fn filter_config(&self) -> FilterConfig {
        FilterConfig {
            q_max: self.qmax,
            fslr_enabled: !self.no_fslr,
            patch_size: self.estimation.patch_size,
            interval: self.interval,
            tail_rule: self.estimation.tail_rule(),
            tail_divisor: self.estimation.tail_divisor(),
            criterion_mode: match self.criterion {
                CriterionArg::Pooled => CriterionMode::Pooled,
                CriterionArg::PerChannel => CriterionMode::PerChannel,
            },
            early_exit: !self.exhaustive,
            ..FilterConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct AddNoiseArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Binary)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub bits: Option<u32>,
    #[command(flatten)]
    pub estimation: EstimationArgs,
    /// True noise level; prints the estimation error.
    #[arg(long)]
    pub actual_sigma: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct PsnrArgs {
    pub reference: PathBuf,
    pub test: PathBuf,
    /// Value reported for identical colours.
    #[arg(long, default_value_t = fgbd_core::cloud::DEFAULT_PSNR_CAP)]
    pub cap: f64,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    /// constant, ramp, two-tone or grid.
    #[arg(long)]
    pub kind: String,
    #[arg(short, long)]
    pub n: usize,
    #[arg(long)]
    pub bits: Option<u32>,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Binary)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Point counts, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [1000usize, 10_000, 100_000])]
    pub sizes: Vec<usize>,
    /// Bit depth of the random clouds (default: smallest cube holding n).
    #[arg(long)]
    pub bits: Option<u32>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Timed runs per builder; the fastest is reported.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    /// Also write the table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}
