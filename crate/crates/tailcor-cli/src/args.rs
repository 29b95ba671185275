use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "tailcor",
    version,
    about = "Tail correlation analytics for return panels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tail correlation of two series, with optional bootstrap errors
    Pair(PairArgs),
    /// Full pairwise matrix of a panel
    Matrix(MatrixArgs),
    /// Matrix estimates over rolling windows
    Rolling(RollingArgs),
    /// Monte Carlo study of the estimator on a synthetic pair
    Mc(McArgs),
    /// Tabulate the Gaussian normalization over level grids
    SgTable(SgTableArgs),
    /// Quantile-based descriptive statistics per series
    Descriptives(DescriptivesArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum NaPolicy {
    /// Reject the file on the first missing cell
    Error,
    /// Remove rows with any missing cell, reporting the count
    Drop,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Gaussian,
    StudentT,
    Stable,
    Nmvm,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Step1Arg {
    /// Standardize with sample quantiles (the estimator as used on data)
    Sample,
    /// Standardize with the model's population quantiles
    Population,
    /// Run both standardizations on the same draws
    Both,
}

#[derive(Args, Debug, Clone)]
pub struct InputOpts {
    /// UTF-8 CSV with a header row of series names
    #[arg(long)]
    pub input: PathBuf,
    /// Column holding ISO-8601 dates; checked strictly increasing
    #[arg(long)]
    pub date_column: Option<String>,
    /// Treatment of missing cells ("", na, nan, null)
    #[arg(long, value_enum, default_value_t = NaPolicy::Error)]
    pub na: NaPolicy,
}

#[derive(Args, Debug, Clone)]
pub struct TailOpts {
    /// Body level for standardization
    #[arg(long, default_value_t = 0.75)]
    pub tau: f64,
    /// Tail level probed by the estimator
    #[arg(long, default_value_t = 0.95)]
    pub xi: f64,
    /// Projection angle: auto, grid:<n>, or fixed:<degrees>
    #[arg(long, default_value = "auto")]
    pub angle: String,
}

#[derive(Args, Debug, Clone)]
pub struct OutputOpts {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the primary artifact here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Cap on worker threads; defaults to all cores
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct BootstrapOpts {
    /// Number of moving-block bootstrap replicates
    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[arg(long, default_value_t = 50)]
    pub block_length: usize,
    /// RNG seed; generated and recorded in the manifest when absent
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct PairArgs {
    #[command(flatten)]
    pub input: InputOpts,
    #[command(flatten)]
    pub tail: TailOpts,
    #[command(flatten)]
    pub boot: BootstrapOpts,
    #[command(flatten)]
    pub out: OutputOpts,
    /// The two series to pair, comma separated; defaults to the panel's
    /// only two columns
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
}

#[derive(Args, Debug)]
pub struct MatrixArgs {
    #[command(flatten)]
    pub input: InputOpts,
    #[command(flatten)]
    pub tail: TailOpts,
    #[command(flatten)]
    pub boot: BootstrapOpts,
    #[command(flatten)]
    pub out: OutputOpts,
}

#[derive(Args, Debug)]
pub struct RollingArgs {
    #[command(flatten)]
    pub input: InputOpts,
    #[command(flatten)]
    pub tail: TailOpts,
    #[command(flatten)]
    pub out: OutputOpts,
    /// Window length in observations
    #[arg(long)]
    pub window: usize,
    /// Stride between window starts; defaults to the window length
    #[arg(long)]
    pub step: Option<usize>,
    /// Minimum length of a trailing partial window; defaults to the window
    /// length, which disables partial windows
    #[arg(long)]
    pub min_obs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct McArgs {
    #[command(flatten)]
    pub tail: TailOpts,
    #[command(flatten)]
    pub out: OutputOpts,
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    /// Degrees of freedom (student-t, nmvm) or stability index (stable)
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Skew of the nmvm family
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Off-diagonal of the 2x2 dispersion matrix
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,
    /// Observations per replicate
    #[arg(long = "T")]
    pub t: usize,
    /// Number of replicates
    #[arg(long = "H")]
    pub h: usize,
    #[arg(long, value_enum, default_value_t = Step1Arg::Sample)]
    pub step1: Step1Arg,
    /// RNG seed; generated and recorded in the manifest when absent
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SgTableArgs {
    #[command(flatten)]
    pub out: OutputOpts,
    /// Body levels: start:end[:step] (step defaults to 0.025) or a comma list
    #[arg(long, default_value = "0.6:0.9:0.025")]
    pub tau_grid: String,
    /// Tail levels, same syntax
    #[arg(long, default_value = "0.7:0.995")]
    pub xi_grid: String,
}

#[derive(Args, Debug)]
pub struct DescriptivesArgs {
    #[command(flatten)]
    pub input: InputOpts,
    #[command(flatten)]
    pub out: OutputOpts,
}
