//! `cpgraph`: synthesize road graphs, measure label concurrency, test the
//! hypothesis across datasets, and train/compare token-prior GCNs.
//!
//! Exit codes: 0 success, 1 data or validation failure, 2 usage error.

mod manifest;
mod metrics;
mod report;
mod synth;
mod train;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cpgraph", version, about = "Incident concurrency analysis and prediction on road graphs")]
struct Cli {
    /// Worker threads for parallel stages (defaults to all cores).
    #[arg(long, global = true, env = "CPGRAPH_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted dataset (or a suite of them).
    Synth(synth::SynthArgs),
    /// Compute ANCD/ANCC per class over hop bounds.
    Metrics(metrics::MetricsArgs),
    /// Paired one-sided t-test over several metrics reports.
    Ttest(metrics::TtestArgs),
    /// Train the GCN with or without the label-token prior.
    Train(train::TrainArgs),
    /// Compare training runs as a table with a delta row.
    Report(report::ReportArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let workers = cli
        .workers
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let argv: Vec<String> = std::env::args().skip(1).collect();

    let result = match cli.command {
        Command::Synth(args) => synth::run(args, argv),
        Command::Metrics(args) => metrics::run_metrics(args, argv, workers),
        Command::Ttest(args) => metrics::run_ttest(args, argv),
        Command::Train(args) => train::run(args, argv, workers),
        Command::Report(args) => report::run(args, argv),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
