//! `hostile`: train, apply and evaluate the hostile post ensemble.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{EvalOptions, Outcome, PredictOptions, StatsOptions, TrainOptions};

#[derive(Parser)]
#[command(
    name = "hostile",
    version,
    about = "Multi-label hostile post detection for Hindi"
)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model bundle from a labeled corpus.
    Train(TrainArgs),
    /// Label a corpus with a trained bundle.
    Predict(PredictArgs),
    /// Score predictions against gold labels.
    Eval(EvalArgs),
    /// Label distribution of one or more corpora.
    Stats(StatsArgs),
}

#[derive(Args)]
struct Overrides {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Empty-union rule: hate_offensive or max_prob.
    #[arg(long)]
    fallback: Option<String>,
    /// Per-slot backend, e.g. `hate=svm` or `fake=external:scores.tsv`. Repeatable.
    #[arg(long = "backend", value_name = "LABEL=BACKEND")]
    backends: Vec<String>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Overrides,
    /// Training corpus (overrides paths.train).
    #[arg(long)]
    train: Option<PathBuf>,
    /// Bundle directory to write.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Classifier slots trained in parallel.
    #[arg(long)]
    jobs: Option<usize>,
    /// Write the training summary here instead of stdout.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    common: Overrides,
    /// Trained bundle directory.
    #[arg(long)]
    model: PathBuf,
    /// Corpus to label (overrides paths.test).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Prediction TSV to write.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Gold corpus (overrides paths.val).
    #[arg(long)]
    gold: Option<PathBuf>,
    /// Prediction TSV from `predict`.
    #[arg(long)]
    predictions: PathBuf,
    /// end_to_end or second_level.
    #[arg(long)]
    scope: Option<String>,
    /// Also write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Prediction summary whose fallback count is echoed in the report.
    #[arg(long)]
    predict_summary: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Emit JSON instead of a table.
    #[arg(long)]
    json: bool,
    /// Corpora; defaults to the config's train/val/test paths.
    inputs: Vec<PathBuf>,
}

fn run(command: Command) -> hostile_core::Result<Outcome> {
    match command {
        Command::Train(a) => commands::train(TrainOptions {
            config: a.common.config,
            train: a.train,
            out: a.out,
            seed: a.seed,
            fallback: a.common.fallback,
            backends: a.common.backends,
            jobs: a.jobs,
            summary: a.summary,
        }),
        Command::Predict(a) => commands::predict(PredictOptions {
            model: a.model,
            input: a.input,
            config: a.common.config,
            out: a.out,
            fallback: a.common.fallback,
            backends: a.common.backends,
            summary: a.summary,
        }),
        Command::Eval(a) => commands::eval(EvalOptions {
            gold: a.gold,
            predictions: a.predictions,
            config: a.config,
            scope: a.scope,
            json: a.json,
            predict_summary: a.predict_summary,
        }),
        Command::Stats(a) => commands::stats(StatsOptions {
            inputs: a.inputs,
            config: a.config,
            json: a.json,
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(outcome) => {
            let _ = std::io::stdout().write_all(outcome.stdout.as_bytes());
            ExitCode::from(outcome.exit_code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
