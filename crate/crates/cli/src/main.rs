mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Context, Options};
use config::RunConfig;
use error::CliError;

/// Heuristic multiple kernel learning: feature extraction, kernel selection,
/// training and the repeated-split benchmark.
#[derive(Parser)]
#[command(name = "hmkl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (`key = value` lines under `[section]` headers).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Also write accuracy-per-iteration and kernel-weight CSVs.
    #[arg(long, global = true)]
    emit_plots: bool,

    /// Skip kernel selection and train l_p MKL on every kernel.
    #[arg(long, global = true)]
    no_heuristic: bool,

    /// MKL norm used with `--no-heuristic`.
    #[arg(long, global = true)]
    p: Option<f64>,

    /// Train fraction: splits the table for select/train, or replaces the
    /// configured fractions for benchmark.
    #[arg(long, global = true)]
    fraction: Option<f64>,

    /// Output directory; overrides `[output] dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Debug)]
enum Command {
    /// Compute descriptor CSVs from an image folder tree.
    Extract,
    /// Build the k-means codebook for the bag of dense LBP.
    Codebook,
    /// Run kernel selection and write the trace.
    Select,
    /// Train a one-vs-all model and write it as JSON.
    Train,
    /// Predict with a trained model.
    Predict {
        /// Model JSON; defaults to `<out>/model.json`.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Run the repeated-split comparison.
    Benchmark,
    /// Rewrite table and plot CSVs from a saved report.
    Report,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Validation("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let path = cli
        .config
        .ok_or_else(|| CliError::Validation("--config <path> is required".into()))?;
    let config = RunConfig::load(&path)?;
    let model = match &cli.command {
        Command::Predict { model } => model.clone(),
        _ => None,
    };
    let ctx = Context::new(
        config,
        Options {
            seed: cli.seed,
            emit_plots: cli.emit_plots,
            no_heuristic: cli.no_heuristic,
            p: cli.p,
            fraction: cli.fraction,
            out: cli.out,
            model,
        },
    )?;
    match cli.command {
        Command::Extract => commands::extract(&ctx),
        Command::Codebook => commands::codebook(&ctx),
        Command::Select => commands::select(&ctx),
        Command::Train => commands::train(&ctx),
        Command::Predict { .. } => commands::predict(&ctx),
        Command::Benchmark => commands::benchmark(&ctx),
        Command::Report => commands::report(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
