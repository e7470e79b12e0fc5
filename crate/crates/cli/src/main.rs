//! `sessmarl`: train, evaluate and compare shared-storage controllers.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
//! Set `RUST_LOG=info` for per-episode training logs.

mod commands;
mod runs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sessmarl::timeseries::Case;

#[derive(Parser, Debug)]
#[command(name = "sessmarl", version, about = "Shared energy storage and building HVAC control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the fully resolved configuration.
    Validate(ValidateArgs),
    /// Train a method and write a run directory.
    Train(TrainArgs),
    /// Roll out trained runs (or the rule heuristic) on the evaluation window.
    Evaluate(EvaluateArgs),
    /// Build a comparison table from evaluation outputs.
    Compare(CompareArgs),
    /// Exhaustive grid search for the optimal cost on a short horizon.
    Oracle(OracleArgs),
    /// Write a synthetic price/temperature CSV.
    SynthData(SynthArgs),
}

#[derive(Args, Debug, Clone)]
struct ConfigArgs {
    /// TOML or JSON run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured global seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Tiny profile: 2 episodes of 8 steps.
    #[arg(long)]
    smoke: bool,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum TrainMethod {
    Proposed,
    UserOnly,
    Centralized,
}

impl TrainMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            TrainMethod::Proposed => "proposed",
            TrainMethod::UserOnly => "user_only",
            TrainMethod::Centralized => "centralized",
        }
    }
}

fn parse_case(s: &str) -> Result<Case, String> {
    s.parse::<Case>().map_err(|e| e.to_string())
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_enum, required_unless_present = "resume")]
    method: Option<TrainMethod>,
    #[arg(long, value_parser = parse_case, required_unless_present = "resume")]
    case: Option<Case>,
    /// Continue an interrupted run directory from its last checkpoint.
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Trained run directory; repeat for several seeds of one method.
    #[arg(long = "run")]
    runs: Vec<PathBuf>,
    /// `heuristic` evaluates the rule set without any training artifacts.
    #[arg(long, conflicts_with = "runs")]
    method: Option<String>,
    #[arg(long, value_parser = parse_case)]
    case: Option<Case>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Evaluation directories (holding `metrics.json`) or record files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_parser = parse_case)]
    case: Option<Case>,
    /// Directory receiving report.txt, report.csv and report.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_parser = parse_case)]
    case: Case,
    #[arg(long)]
    horizon: Option<usize>,
    /// Comma-separated levels in kW, e.g. `-1,0,1`.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Keep only the first N buildings.
    #[arg(long)]
    buildings: Option<usize>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, value_parser = parse_case)]
    case: Case,
    /// Output CSV file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2018)]
    seed: u64,
    /// Length in hours; defaults to the case's range.
    #[arg(long)]
    hours: Option<usize>,
}

/// Marks errors caused by the invocation or configuration (exit code 1).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    match err.downcast_ref::<sessmarl::Error>() {
        Some(sessmarl::Error::Config { .. }) | Some(sessmarl::Error::EnumerationBound { .. }) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Validate(a) => commands::validate(&a.config),
        Command::Train(a) => commands::train(&a.config, a.method, a.case, a.resume.as_deref()),
        Command::Evaluate(a) => commands::evaluate(&a.config, &a.runs, a.method.as_deref(), a.case),
        Command::Compare(a) => commands::compare(&a.inputs, a.case, a.out.as_deref()),
        Command::Oracle(a) => commands::oracle(&a.config, a.case, a.horizon, a.grid.as_deref(), a.lambda, a.buildings),
        Command::SynthData(a) => commands::synth_data(a.case, &a.out, a.seed, a.hours),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
