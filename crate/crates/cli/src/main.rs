mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Columns, EstimatorSpec, ScoreChoice, VariantChoice};

/// Distribution-free prediction bands, LOCO variable importance and
/// simulation experiments.
#[derive(Debug, Parser)]
#[command(name = "conformal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Prediction intervals at query points.
    Band(BandArgs),
    /// Leave-one-covariate-out inference.
    Loco(LocoArgs),
    /// Run a coverage/length experiment.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Miscoverage level [default: 0.1].
    #[arg(long)]
    alpha: Option<f64>,
    /// Seed for splits and CV [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (band) or directory (loco, simulate).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BandArgs {
    /// Training data with header x1,...,xd,y.
    train: PathBuf,
    /// Query points with header x1,...,xd.
    query: PathBuf,
    #[command(flatten)]
    common: Common,
    /// ols, zero, ridge:L, lasso:L, lasso_cv[:K], elastic_net:L:G,
    /// stepwise:K, kernel:H, bspline:DF [default: ols].
    #[arg(long)]
    estimator: Option<EstimatorSpec>,
    /// full, split, multi, jackknife, naive, roo, roo_relaxed [default: split].
    #[arg(long)]
    variant: Option<VariantChoice>,
    /// absolute or weighted [default: absolute].
    #[arg(long)]
    score: Option<ScoreChoice>,
    /// Spread estimator for weighted scores [default: same as --estimator].
    #[arg(long)]
    mad_estimator: Option<EstimatorSpec>,
    /// Fraction of the data used for fitting in split variants [default: 0.5].
    #[arg(long)]
    ratio: Option<f64>,
    /// Number of splits for the multi-split variant [default: 10].
    #[arg(long)]
    splits: Option<usize>,
    /// Trial grid lower end (full variant).
    #[arg(long, allow_negative_numbers = true)]
    grid_lo: Option<f64>,
    /// Trial grid upper end (full variant).
    #[arg(long, allow_negative_numbers = true)]
    grid_hi: Option<f64>,
    /// Trial grid size (full variant) [default: 200].
    #[arg(long)]
    grid_n: Option<usize>,
}

#[derive(Debug, Args)]
struct LocoArgs {
    /// Data with header x1,...,xd,y.
    data: PathBuf,
    #[command(flatten)]
    common: Common,
    /// Base estimator, as for `band` [default: ols].
    #[arg(long)]
    estimator: Option<EstimatorSpec>,
    /// Fraction of the data used for fitting [default: 0.5].
    #[arg(long)]
    ratio: Option<f64>,
    /// Covariates to test, numbered from 1 (e.g. `1,3`) [default: all].
    #[arg(long)]
    columns: Option<Columns>,
    /// Test the active set of a cross-validated lasso instead of fixed columns.
    #[arg(long)]
    select: Option<String>,
    /// CV folds for `--select lasso_cv` [default: 10].
    #[arg(long)]
    folds: Option<usize>,
    /// Also write per-point intervals W_j(X_i) to local.csv.
    #[arg(long)]
    local: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// T1, T2, T3, F1, F2, F3, F6 or F7.
    #[arg(long)]
    experiment: Option<String>,
    /// Repetitions [default: 20].
    #[arg(long)]
    reps: Option<usize>,
    /// Shrinks n, d and the test size by this factor, in (0, 1] [default: 1].
    #[arg(long)]
    scale: Option<f64>,
    /// Trial grid size for full conformal [default: 200].
    #[arg(long)]
    grid_n: Option<usize>,
    /// Record wall times (output is then no longer byte-reproducible).
    #[arg(long)]
    timing: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Band(a) => commands::band(a),
        Command::Loco(a) => commands::loco(a),
        Command::Simulate(a) => commands::simulate(a),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
