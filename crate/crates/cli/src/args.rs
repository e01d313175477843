use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dbacf::jusd::IntervalMode;
use dbacf::sim::DEFAULT_SEED;

#[derive(Debug, Parser)]
#[command(name = "dbacf", version, about = "Difference-based autocovariance estimation and jump segmentation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate gamma_0..gamma_m from a series.
    Estimate(EstimateArgs),
    /// Nearest PSD banded Toeplitz matrix to an estimated autocovariance.
    Project(ProjectArgs),
    /// Fit an MA(m) model to an autocovariance.
    Mafit(MafitArgs),
    /// Estimate, fit the noise model, calibrate and segment a series.
    Segment(SegmentArgs),
    /// Monte Carlo MSE of the estimated autocorrelations.
    Bench(BenchArgs),
    /// Draw signal plus noise from a run config.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Intervals {
    Full,
    Dyadic,
}

impl From<Intervals> for IntervalMode {
    fn from(i: Intervals) -> Self {
        match i {
            Intervals::Full => IntervalMode::Full,
            Intervals::Dyadic => IntervalMode::Dyadic,
        }
    }
}

#[derive(Debug, Args)]
pub struct Io {
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub io: Io,
    /// Dependence order.
    #[arg(long)]
    pub m: usize,
    /// Weight d for every lag, or only for lag --h.
    #[arg(long, allow_negative_numbers = true)]
    pub d: Option<f64>,
    #[arg(long, requires = "d")]
    pub h: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[command(flatten)]
    pub io: Io,
    #[arg(long, default_value_t = dbacf::projection::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = dbacf::projection::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Matrix dimension (raised to m+1 if smaller).
    #[arg(long, default_value_t = 32)]
    pub project_dim: usize,
}

#[derive(Debug, Args)]
pub struct MafitArgs {
    #[command(flatten)]
    pub io: Io,
    #[arg(long, default_value_t = dbacf::mafit::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = dbacf::mafit::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub io: Io,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Null replicates for the quantile.
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "dyadic")]
    pub intervals: Intervals,
    /// Projection tolerance, used when the estimate needs repair.
    #[arg(long, default_value_t = dbacf::projection::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = dbacf::projection::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 32)]
    pub project_dim: usize,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub io: Io,
    /// Override the config's reps.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub io: Io,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}
