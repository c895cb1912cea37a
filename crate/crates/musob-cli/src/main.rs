mod config;
mod expr;
mod output;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use musob::conditions::AverageConvention;
use output::OutputWriter;
use tasks::{GlobalOpts, TaskOutcome};

/// Modulus, gradient and condition reports over a JSON experiment config.
#[derive(Parser)]
#[command(name = "musob", version, about)]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,

    /// Directory for report.txt, summary.kv and CSV tables.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,

    /// Worker threads for parallel sections (default: all cores).
    #[arg(long)]
    threads: Option<usize>,

    /// Relative feasibility tolerance of the convex solver.
    #[arg(long, default_value_t = 1e-7)]
    tol_feas: f64,

    /// Relative duality-gap tolerance of the convex solver.
    #[arg(long, default_value_t = 1e-6)]
    tol_gap: f64,

    /// Reading of the integral signs in the Poincare / two-weight displays.
    #[arg(long, value_enum, default_value_t = ConventionArg::Standard)]
    average_convention: ConventionArg,

    /// Exit with code 4 when a checker reports a hard violation.
    #[arg(long)]
    strict: bool,

    /// Override every generator seed in the config.
    #[arg(long)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConventionArg {
    Standard,
    Alternate,
}

#[derive(Subcommand)]
enum Command {
    /// p-modulus of a path family.
    Modulus,
    /// Minimal upper gradient of a function over a family.
    MinGradient,
    /// Check a candidate upper gradient against a family.
    VerifyGradient,
    /// Newton norm (L^p plus minimal-gradient norm).
    NewtonNorm,
    /// Lipschitz truncation sweep.
    Truncate,
    /// Minimal pointwise (Hajlasz) gradient on the cell centers.
    Hajlasz,
    /// Poincare constant over sampled balls.
    Poincare,
    /// Arc-chord constant of a family.
    ArcChord,
    /// Two-weight cube conditions (growth and A-type) for a weight.
    Weights,
    /// Embedding probes (Holder or p-star).
    Embedding,
    /// Mass parametrization tables for a family.
    Parametrize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            if cli.strict && outcome.hard_violation {
                eprintln!("strict mode: hard violation reported");
                ExitCode::from(4)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = match err.downcast_ref::<musob::Error>() {
                Some(musob::Error::NonConvergence { .. }) => 3,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<TaskOutcome> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .ok();
    }
    let experiment = config::load(&cli.config, cli.seed)?;
    let opts = GlobalOpts {
        tol_feas: cli.tol_feas,
        tol_gap: cli.tol_gap,
        convention: match cli.average_convention {
            ConventionArg::Standard => AverageConvention::Standard,
            ConventionArg::Alternate => AverageConvention::Alternate,
        },
    };
    let mut out = OutputWriter::new(&cli.out_dir)?;
    let outcome = match cli.command {
        Command::Modulus => tasks::run_modulus(&experiment, &opts, &mut out)?,
        Command::MinGradient => tasks::run_min_gradient(&experiment, &opts, &mut out)?,
        Command::VerifyGradient => tasks::run_verify_gradient(&experiment, &opts, &mut out)?,
        Command::NewtonNorm => tasks::run_newton_norm(&experiment, &opts, &mut out)?,
        Command::Truncate => tasks::run_truncate(&experiment, &opts, &mut out)?,
        Command::Hajlasz => tasks::run_hajlasz(&experiment, &opts, &mut out)?,
        Command::Poincare => tasks::run_poincare(&experiment, &opts, &mut out)?,
        Command::ArcChord => tasks::run_arc_chord(&experiment, &opts, &mut out)?,
        Command::Weights => tasks::run_weights(&experiment, &opts, &mut out)?,
        Command::Embedding => tasks::run_embedding(&experiment, &opts, &mut out)?,
        Command::Parametrize => tasks::run_parametrize(&experiment, &opts, &mut out)?,
    };
    out.finish()?;
    Ok(outcome)
}
