//! `interq`: run, compare and characterize schedules on modular QPU platforms.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "interq", version, about = "Communication-aware scheduling on modular QPU clouds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Schedule and simulate one workload; write schedule, trace, metrics and Gantt data.
    Run(RunArgs),
    /// Run several configurations and tabulate metrics against a baseline.
    Compare(CompareArgs),
    /// Per-job partition count, remote operations and extra qubits under quantum links.
    Characterize(CharacterizeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
enum PolicyArg {
    Interq,
    SerialRr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
enum QueueModeArg {
    Batch,
    EventDriven,
}

#[derive(Debug, Args)]
struct RunOptions {
    /// Scheduling policy.
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    /// Random seed for pair generation and arrival jitter.
    #[arg(long)]
    seed: Option<u64>,
    /// Cost weights as `alpha,beta,gamma,eta`.
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    max_rounds: Option<u32>,
    #[arg(long, value_enum)]
    queue_mode: Option<QueueModeArg>,
    /// Uniform arrival jitter in ns.
    #[arg(long)]
    jitter_ns: Option<u64>,
    /// JSON file with defaults for the options above; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Preset name or platform JSON file.
    #[arg(long)]
    platform: String,
    #[arg(long)]
    workload: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Exit with status 2 when a job cannot be scheduled.
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    options: RunOptions,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Configurations as `PLATFORM` or `PLATFORM:POLICY`, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    platforms: Vec<String>,
    #[arg(long)]
    workload: PathBuf,
    /// Configuration id the factors are computed against.
    #[arg(long)]
    baseline: String,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    options: RunOptions,
}

#[derive(Debug, Args)]
struct CharacterizeArgs {
    #[arg(long)]
    platform: String,
    #[arg(long)]
    workload: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("INTERQ_LOG"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => commands::run(a),
        Command::Compare(a) => commands::compare(a),
        Command::Characterize(a) => commands::characterize(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<commands::Unschedulable>() {
                Some(_) => ExitCode::from(2),
                None => ExitCode::from(1),
            }
        }
    }
}
