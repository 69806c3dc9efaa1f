use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use scoretest::perturb::PerturbTarget;

#[derive(Debug, Parser)]
#[command(name = "scoretest", version, about = "Score-based hypothesis tests and their error exponents")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// midpoint, n1-balance or fixed:<T>.
    #[arg(long, global = true)]
    pub threshold_policy: Option<String>,
    /// Comma-separated sample sizes, e.g. 1,2,4,8.
    #[arg(long, global = true, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long, global = true)]
    pub pool_size: Option<usize>,
    #[arg(long, global = true)]
    pub runs: Option<usize>,
    /// Train on this many points (subsampled by seed).
    #[arg(long, global = true)]
    pub train_n: Option<usize>,
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Finite-difference check of model gradients and Laplacians.
    Check(CheckArgs),
    /// Empirical (and, for Gaussian shifts, closed-form) error exponents.
    Exponent(ExponentArgs),
    /// Resampled type-I/II error rates over a grid of sample sizes.
    Sweep,
    /// Fit a Gauss-Bernoulli RBM by score matching.
    TrainRbm(TrainArgs),
    /// Ingest a labeled CSV, standardize and split by label.
    Ingest(IngestArgs),
    /// Write a perturbed copy of a model.
    Perturb(PerturbArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    /// Check a single model file instead of the config's models.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub probes: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ExponentArgs {
    /// Samples per hypothesis; overrides the config.
    #[arg(long)]
    pub m: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainArgs {
    /// Training points (CSV with header x0,...).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub d_h: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Cold start from this RBM model file.
    #[arg(long)]
    pub init: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub schema: PathBuf,
    #[arg(long, default_value = "normal")]
    pub null_label: String,
    /// Attack categories with at most this many rows become "unknown".
    #[arg(long, default_value_t = 100)]
    pub unknown_max: usize,
    /// Apply previously saved standardization statistics.
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PerturbArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum)]
    pub target: TargetArg,
    #[arg(long, default_value_t = scoretest::perturb::DEFAULT_SIGMA_PTB)]
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TargetArg {
    Mean,
    Cov,
    Weights,
    Tau,
}

impl From<TargetArg> for PerturbTarget {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Mean => PerturbTarget::Mean,
            TargetArg::Cov => PerturbTarget::Cov,
            TargetArg::Weights => PerturbTarget::Weights,
            TargetArg::Tau => PerturbTarget::Tau,
        }
    }
}
