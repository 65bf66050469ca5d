use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use wavefront_core::SolverVariant;

#[derive(Debug, Parser)]
#[command(
    name = "wavefront",
    version,
    about = "Fractal-prior wavefront reconstruction from Shack-Hartmann slopes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a Kolmogorov phase screen w = K·u.
    Generate(GenerateArgs),
    /// Measure noisy Fried-geometry slopes of a screen.
    Sense(SenseArgs),
    /// Reconstruct a wavefront from slopes.
    Reconstruct(ReconstructArgs),
    /// Run Monte-Carlo trials and write median convergence curves.
    Simulate(SimulateArgs),
    /// Compare the structure function of generated screens with theory.
    ValidateSf(ValidateSfArgs),
    /// Measure operation counts and timings across grid sizes.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Number of scales; the grid side is 2^p + 1.
    #[arg(long = "p", default_value_t = 6)]
    pub p: u32,
    /// Fried parameter in grid steps.
    #[arg(long, default_value_t = 1.0)]
    pub r0: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Solver variant.
    #[arg(long, default_value = "u-pcg-opt")]
    pub method: SolverVariant,
    #[arg(long = "max-iter", default_value_t = 30)]
    pub max_iter: usize,
    /// Relative residual tolerance.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    /// Directory for cached preconditioners.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output grid file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SenseArgs {
    /// Input grid file.
    #[arg(long)]
    pub screen: PathBuf,
    /// Slope noise standard deviation, rad per subaperture.
    #[arg(long = "noise-std", default_value_t = 1.0)]
    pub noise_std: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output slopes CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Input slopes CSV.
    #[arg(long)]
    pub slopes: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// True screen; adds residual statistics to the trace.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Output grid file.
    #[arg(long)]
    pub out: PathBuf,
    /// Output convergence trace CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long = "noise-std", default_value_t = 1.0)]
    pub noise_std: f64,
    /// Solver variants, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "u-pcg-opt")]
    pub method: Vec<SolverVariant>,
    #[arg(long = "max-iter", default_value_t = 30)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Output curves CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateSfArgs {
    #[arg(long = "p", default_value_t = 5)]
    pub p: u32,
    #[arg(long, default_value_t = 1.0)]
    pub r0: f64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output profile CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Output 2D map as a grid file.
    #[arg(long)]
    pub map: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long = "p-min", default_value_t = 5)]
    pub p_min: u32,
    #[arg(long = "p-max", default_value_t = 8)]
    pub p_max: u32,
    #[arg(long, default_value_t = 1.0)]
    pub r0: f64,
    #[arg(long = "noise-std", default_value_t = 1.0)]
    pub noise_std: f64,
    #[arg(long, default_value = "u-pcg-opt")]
    pub method: SolverVariant,
    #[arg(long = "max-iter", default_value_t = 10)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Use a unit preconditioner: exact operation counts without the O(N²) precompute.
    #[arg(long)]
    pub flops_only: bool,
    /// Output bench CSV.
    #[arg(long)]
    pub out: PathBuf,
}
