//! `fabci` command-line tool.

mod commands;
mod error;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Parser)]
#[command(name = "fabci", version, about = "Constant-coverage adaptive confidence intervals for grouped normal data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit hierarchical-model hyperparameters and run Levene's test.
    Estimate(EstimateArgs),
    /// Per-group confidence intervals.
    Interval(IntervalArgs),
    /// Monte Carlo coverage and width study.
    Simulate(SimulateArgs),
    /// Expected-width (risk) table over a θ grid.
    RiskCurve(RiskArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Model {
    Homo,
    Hetero,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
pub struct EstimateArgs {
    /// CSV file with header `group,value`.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "hetero")]
    pub model: Model,
    /// JSON report path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    FabZ,
    FabT,
    FabHomo,
    FabHetero,
    Umau,
    Eb,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EstimatorArg {
    Moments,
    Mle,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
pub struct IntervalArgs {
    /// CSV file with header `group,value`; omit to give one summary with --ybar.
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Prior mean of θ.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Prior variance of θ.
    #[arg(long)]
    pub tau2: Option<f64>,
    /// Known sampling variance of one observation (fab-z).
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Gamma shape of the precision prior (fab-t).
    #[arg(long)]
    pub a: Option<f64>,
    /// Gamma rate of the precision prior (fab-t).
    #[arg(long)]
    pub b: Option<f64>,
    /// Sample size behind --ybar/--s2.
    #[arg(long)]
    pub n: Option<usize>,
    /// Sample mean, for a single summary without a data file.
    #[arg(long)]
    pub ybar: Option<f64>,
    /// Sample variance, for a single summary without a data file.
    #[arg(long)]
    pub s2: Option<f64>,
    /// Groups pooled with each target for fab-homo (default: automatic).
    #[arg(long)]
    pub p1: Option<usize>,
    /// Hyperparameter estimator for fab-homo.
    #[arg(long, value_enum, default_value = "moments")]
    pub estimator: EstimatorArg,
    /// Quadrature nodes for the Bayes-optimal w (fab-t, fab-hetero).
    #[arg(long, default_value_t = 21)]
    pub quad_nodes: usize,
    /// Use the noncentral-t kernel and direct search for fab-t (slower).
    #[arg(long)]
    pub exact_kernel: bool,
    /// CSV output path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a JSON summary here.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
pub struct SimulateArgs {
    /// `radon-like`, `hierarchical`, or a CSV file with header `group,n,theta,sigma2`.
    #[arg(long, default_value = "radon-like")]
    pub truth: String,
    /// Comma-separated: umau, eb, fab-homo, fab-hetero.
    #[arg(long, default_value = "umau,eb,fab-hetero")]
    pub procedures: String,
    #[arg(long, default_value_t = 2000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Number of groups for a hierarchical truth.
    #[arg(long, default_value_t = 20)]
    pub groups: usize,
    /// Group size for a hierarchical truth.
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.25)]
    pub tau2: f64,
    #[arg(long, default_value_t = 4.0)]
    pub a: f64,
    #[arg(long, default_value_t = 3.0)]
    pub b: f64,
    #[arg(long)]
    pub p1: Option<usize>,
    #[arg(long, default_value_t = 21)]
    pub quad_nodes: usize,
    /// Output directory for coverage.csv, widths.csv and summary.json
    /// (summary to stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RiskKind {
    Z,
    T,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
pub struct RiskArgs {
    #[arg(long, value_enum, default_value = "z")]
    pub kind: RiskKind,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    /// One or more prior variances, comma-separated.
    #[arg(long, default_value = "0.25")]
    pub tau2: String,
    /// z: sampling variance of y. t: hold σ² fixed at this value instead of
    /// drawing it from the prior.
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    /// `lo:hi:count` (default: 121 points over μ ± 6 sampling sd).
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Monte Carlo draws per θ (the cross-check for z, the estimate for t).
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 21)]
    pub quad_nodes: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("FAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("FAB_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure {n} threads: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| match cli.command {
        Command::Estimate(a) => commands::estimate(&a),
        Command::Interval(a) => commands::interval(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::RiskCurve(a) => commands::risk_curve(&a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
