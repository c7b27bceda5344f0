use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use foresight_gateway::BackendKind;

mod commands;
mod config;
mod manifest;

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_240_611;

#[derive(Debug, Parser)]
#[command(name = "foresight", version, about = "Futures Wheel risk pipeline, analysis and session server")]
struct Cli {
    /// Seed for bootstrap resampling and batch assignment.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate, classify and deduplicate risks over repeated wheel runs.
    Pipeline(PipelineArgs),
    /// PESTEL tables, diversity, saturation and rating comparisons.
    Analyze(AnalyzeArgs),
    /// Serve the session API.
    Serve(ServeArgs),
    /// Build blinded rating cards (JSON and HTML) from risk files.
    Cards(CardsArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BackendArg {
    Mock,
    Remote,
}

impl From<BackendArg> for BackendKind {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Mock => BackendKind::Mock,
            BackendArg::Remote => BackendKind::Remote,
        }
    }
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Config file (TOML).
    pub config: PathBuf,
    #[arg(long)]
    pub runs: Option<u32>,
    #[arg(long = "use-case")]
    pub use_case: Option<String>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Runs executed concurrently.
    #[arg(long)]
    pub parallel: Option<usize>,
    /// Replace the output of an earlier invocation.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Risk files (JSONL, one risk per line).
    #[arg(long, num_args = 1..)]
    pub risks: Vec<PathBuf>,
    /// Rating files (`.csv` or JSONL).
    #[arg(long, num_args = 1..)]
    pub ratings: Vec<PathBuf>,
    /// Card index written by `cards`; needed to group ratings.
    #[arg(long = "cards-index")]
    pub cards_index: Option<PathBuf>,
    /// Label attached to rating summaries.
    #[arg(long, default_value = "all")]
    pub cohort: String,
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Port to bind; 0 picks a free one.
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Session storage directory; sessions stay in memory when omitted.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
}

#[derive(Debug, Args)]
pub struct CardsArgs {
    #[arg(long, num_args = 1..)]
    pub risks: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also plan batches for this many evaluators.
    #[arg(long)]
    pub evaluators: Option<usize>,
    /// Config supplying extra use cases.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

#[tokio::main]
async fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Pipeline(a) => commands::pipeline::run(a, cli.seed).await,
        Command::Analyze(a) => commands::analyze::run(a, cli.seed),
        Command::Serve(a) => commands::serve::run(a).await,
        Command::Cards(a) => commands::cards::run(a, cli.seed),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
