//! `lpreg`: generate problems, run solves and continuation experiments, and
//! compare solvers. Exit codes: 0 success, 2 usage, 3 I/O, 4 solver failure.

mod commands;
mod error;
mod options;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use lpreg::SolverKind;
use serde::{Deserialize, Serialize};

use error::CliError;
use options::{parse_solver, Common, SolverKnobs};

#[derive(Debug, Parser)]
#[command(name = "lpreg", version, about = "lp-regularized inversion with IRLS-CG, CONV-CG and FISTA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a problem bundle (A.mtx, data vectors, x_true.txt, meta.json)
    #[command(subcommand)]
    Gen(GenKind),
    /// Solve one problem at one λ
    Solve(SolveArgs),
    /// Continuation over a λ grid with L-curve, curvature and corner
    Lcurve(LcurveArgs),
    /// Tomography with outliers: best model RMSE per residual exponent l
    Tomo(TomoArgs),
    /// Head-to-head cost reduction along the λ grid over random trials
    Compare(CompareArgs),
}

#[derive(Debug, Subcommand)]
pub enum GenKind {
    /// Straight-ray tomography on a checkerboard model
    Tomo(GenTomo),
    /// Dense matrix with log-spaced singular values and a sparse model
    Matrix(GenMatrix),
}

#[derive(Debug, Args)]
pub struct GenTomo {
    /// Pixels per side (n = grid²)
    #[arg(long, default_value_t = 32)]
    pub grid: usize,
    #[arg(long, default_value_t = 400)]
    pub rays: usize,
    /// Checkerboard block size in pixels
    #[arg(long, default_value_t = 4)]
    pub block: usize,
    #[arg(long, default_value_t = 0.02)]
    pub amplitude: f64,
    /// Gaussian noise std relative to rms(b)
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.10)]
    pub outlier_frac: f64,
    /// Outlier size in units of rms(b)
    #[arg(long, default_value_t = 5.0)]
    pub outlier_scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct GenMatrix {
    #[arg(long, default_value_t = 300)]
    pub m: usize,
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    /// Base-10 exponents of the largest and smallest singular value
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,-2.5")]
    pub decay: Vec<f64>,
    /// Nonzeros in the model
    #[arg(long, default_value_t = 15)]
    pub sparsity: usize,
    /// Gaussian noise std relative to rms(b)
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SolveArgs {
    /// Problem bundle directory
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    /// irls-cg, conv-cg or fista [default: irls-cg]
    #[arg(long, value_parser = parse_solver)]
    pub solver: Option<SolverKind>,
    /// Regularization weight λ
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Data vector: clean, noisy or outliers [default: the noisiest present]
    #[arg(long)]
    pub data: Option<String>,
    /// Starting model file [default: zero]
    #[arg(long)]
    pub x0: Option<PathBuf>,
    /// Solve for CDF 9/7 wavelet coefficients with this many levels
    #[arg(long)]
    pub wavelet_levels: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub knobs: SolverKnobs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct LcurveArgs {
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    /// irls-cg, conv-cg or fista [default: conv-cg]
    #[arg(long, value_parser = parse_solver)]
    pub solver: Option<SolverKind>,
    #[arg(long)]
    pub data: Option<String>,
    #[arg(long)]
    pub wavelet_levels: Option<usize>,
    /// Largest λ [default: ‖Aᵀb‖∞/1.2]
    #[arg(long)]
    pub lambda_max: Option<f64>,
    /// Smallest λ [default: 1.2e-6·λ_max]
    #[arg(long)]
    pub lambda_min: Option<f64>,
    /// Number of λ values [default: 50]
    #[arg(long)]
    pub grid_count: Option<usize>,
    /// Iterations at each λ [default: 5]
    #[arg(long)]
    pub iters_per_lambda: Option<usize>,
    /// Carry ε or σ from one λ to the next
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub carry_smoothing: Option<bool>,
    /// 3-point moving average of the curvature
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub smooth_curvature: Option<bool>,
    /// Known noise norm ‖e‖₂ for the discrepancy principle
    #[arg(long)]
    pub noise_norm: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub knobs: SolverKnobs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TomoArgs {
    /// Pixels per side [default: 32]
    #[arg(long)]
    pub grid: Option<usize>,
    /// [default: 400]
    #[arg(long)]
    pub rays: Option<usize>,
    /// [default: 4]
    #[arg(long)]
    pub block: Option<usize>,
    /// [default: 0.02]
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// [default: 0.05]
    #[arg(long)]
    pub noise: Option<f64>,
    /// [default: 0.10]
    #[arg(long)]
    pub outlier_frac: Option<f64>,
    /// [default: 5]
    #[arg(long)]
    pub outlier_scale: Option<f64>,
    /// [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Data vector to invert [default: outliers]
    #[arg(long)]
    pub data: Option<String>,
    /// irls-cg or conv-cg [default: irls-cg]
    #[arg(long, value_parser = parse_solver)]
    pub solver: Option<SolverKind>,
    /// Residual exponents to compare [default: 1,1.8,2]
    #[arg(long, value_delimiter = ',')]
    pub l_values: Option<Vec<f64>>,
    /// Single λ instead of a grid search
    #[arg(long)]
    pub lambda: Option<f64>,
    /// [default: 10]
    #[arg(long)]
    pub lambda_max: Option<f64>,
    /// [default: 1e-3]
    #[arg(long)]
    pub lambda_min: Option<f64>,
    /// [default: 17]
    #[arg(long)]
    pub grid_count: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub knobs: SolverKnobs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CompareArgs {
    /// At least two of irls-cg, conv-cg, fista [default: all three]
    #[arg(long, value_delimiter = ',', value_parser = parse_solver)]
    pub solvers: Option<Vec<SolverKind>>,
    /// [default: 10]
    #[arg(long)]
    pub trials: Option<usize>,
    /// [default: 300]
    #[arg(long)]
    pub m: Option<usize>,
    /// [default: 300]
    #[arg(long)]
    pub n: Option<usize>,
    /// Singular value exponents [default: 0,-2.5]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub decay: Option<Vec<f64>>,
    /// [default: 15]
    #[arg(long)]
    pub sparsity: Option<usize>,
    /// [default: 0.01]
    #[arg(long)]
    pub noise: Option<f64>,
    /// λ steps to run from the top of the grid [default: 10]
    #[arg(long)]
    pub steps: Option<usize>,
    /// Size of the full λ grid the steps are taken from [default: 50]
    #[arg(long)]
    pub grid_count: Option<usize>,
    /// [default: 3]
    #[arg(long)]
    pub iters_per_lambda: Option<usize>,
    /// Trial t uses seed + t [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub carry_smoothing: Option<bool>,
    #[command(flatten)]
    #[serde(flatten)]
    pub knobs: SolverKnobs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

/// Long flag names of a subcommand, which double as config-file keys.
fn config_keys(sub: &str) -> Vec<String> {
    Cli::command()
        .find_subcommand(sub)
        .map(|c| {
            c.get_arguments()
                .filter_map(|a| a.get_long())
                .filter(|l| *l != "config")
                .map(str::to_string)
                .collect()
        })
        .unwrap_or_default()
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(GenKind::Tomo(a)) => commands::gen_tomo(&a),
        Command::Gen(GenKind::Matrix(a)) => commands::gen_matrix(&a),
        Command::Solve(a) => {
            let a = options::merge_config(&a, a.common.config.as_deref(), &config_keys("solve"))?;
            commands::solve(&a)
        }
        Command::Lcurve(a) => {
            let a = options::merge_config(&a, a.common.config.as_deref(), &config_keys("lcurve"))?;
            commands::lcurve(&a)
        }
        Command::Tomo(a) => {
            let a = options::merge_config(&a, a.common.config.as_deref(), &config_keys("tomo"))?;
            commands::tomo(&a)
        }
        Command::Compare(a) => {
            let a = options::merge_config(&a, a.common.config.as_deref(), &config_keys("compare"))?;
            commands::compare(&a)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lpreg: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
