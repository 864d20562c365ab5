//! `ptme`: run PT-ME experiments, measure them, distill policies and compare methods.

mod commands;
mod manifest;
mod tables;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "ptme", version, about = "Parametric-task MAP-Elites experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one method on one problem for a list of seeds.
    Run(RunArgs),
    /// QD-Score per resolution, MR-QD-Score summary and rank-sum table for logs.
    Metrics(MetricsArgs),
    /// Re-archive a log, train a policy on the elites and score it on probe tasks.
    Distill(DistillArgs),
    /// Query a saved policy or score it on probe tasks.
    Infer(InferArgs),
    /// Pairwise one-sided rank-sum p-values between methods of a summary table.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment manifest (JSON); flags override its fields.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// arm10, archery or linear_toy(SEED).
    #[arg(long)]
    pub problem: Option<String>,
    /// ptme, ptme_no_reg, ptme_full_reg, ptme_no_tournament, ptme_no_reg_no_tournament, mtme(K) or random.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub cells: Option<usize>,
    /// `A..B` (inclusive), `A..=B`, or a comma-separated list.
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long)]
    pub sigma_sbx: Option<f64>,
    #[arg(long)]
    pub sigma_reg: Option<f64>,
    /// Comma-separated tournament sizes for the bandit.
    #[arg(long)]
    pub tournament_sizes: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Parallel runs (default: available cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Log files, or directories searched recursively for log.jsonl.
    #[arg(required = true)]
    pub logs: Vec<PathBuf>,
    /// `logspace:LOW:HIGH:COUNT` or a comma-separated list (default: 50 log-spaced up to the budget).
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long, default_value_t = ptme_core::metrics::DEFAULT_GEOMETRY_SEED)]
    pub geometry_seed: u64,
    /// Directory receiving qd_scores.csv, summary.csv and pvalues.csv.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DistillArgs {
    pub log: PathBuf,
    /// Re-archiving resolution of the training set (default: budget / 20).
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long, default_value_t = ptme_core::metrics::DEFAULT_PROBE_COUNT)]
    pub probes: usize,
    /// Overrides the problem recorded next to the log.
    #[arg(long)]
    pub problem: Option<String>,
    /// Policy output (default: policy.json next to the log).
    #[arg(long)]
    pub policy: Option<PathBuf>,
    /// Report output (default: inference.csv next to the log).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = ptme_core::metrics::DEFAULT_GEOMETRY_SEED)]
    pub geometry_seed: u64,
    #[arg(long, default_value_t = ptme_core::metrics::DEFAULT_PROBE_SEED)]
    pub probe_seed: u64,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub policy: PathBuf,
    #[arg(long)]
    pub problem: Option<String>,
    /// Comma-separated task parameters; prints the policy's solution.
    #[arg(long)]
    pub theta: Option<String>,
    #[arg(long, default_value_t = ptme_core::metrics::DEFAULT_PROBE_COUNT)]
    pub probes: usize,
    #[arg(long, default_value_t = ptme_core::metrics::DEFAULT_PROBE_SEED)]
    pub probe_seed: u64,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// summary.csv written by `metrics`.
    pub summary: PathBuf,
    /// Column to compare: mr_qd_score or inference_score.
    #[arg(long, default_value = "mr_qd_score")]
    pub metric: String,
    /// Output CSV (default: print to stdout only).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(args) => commands::run(args),
        Command::Metrics(args) => commands::metrics(args),
        Command::Distill(args) => commands::distill(args),
        Command::Infer(args) => commands::infer(args),
        Command::Compare(args) => commands::compare(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
