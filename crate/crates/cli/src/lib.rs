//! Command-line front end for morphoscope.

pub mod commands;
pub mod config;
pub mod provenance;
pub mod svg;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::{RunConfig, SharedArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] morphoscope::Error),
    #[error("{0}")]
    Usage(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 0 success, 1 environment or I/O, 2 user or specification error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_environmental() => 1,
            CliError::Core(_) | CliError::Usage(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "morphoscope", version, about = "Find the embedding dimensions that encode a morphosyntactic attribute")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub shared: SharedArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a Gaussian probe on the training split and write model.json
    Fit,
    /// Greedy (or exhaustive) dimension selection; writes trace.tsv and trace.json
    Select(SelectArgs),
    /// Per-prefix metrics of a trace on one split; writes metrics.tsv and metrics.json
    Eval(EvalArgs),
    /// Markdown report and curve plot from metrics.json
    Report(ReportArgs),
    /// SVG scatter plot of two dimensions with probe contours
    Scatter(ScatterArgs),
    /// Generate a synthetic dataset from a JSON spec
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    Greedy,
    Exhaustive,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Defaults to <out>/model.json
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "greedy")]
    pub strategy: Strategy,
    /// Subset size for the exhaustive strategy
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Defaults to <out>/trace.tsv
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Defaults to <out>/metrics.json
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScatterArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Two dimension indices, e.g. `3,17`
    #[arg(long)]
    pub dims: String,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub spec: PathBuf,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let config = RunConfig::resolve(&cli.shared)?;
    let go = || match &cli.command {
        Command::Fit => commands::fit(&config),
        Command::Select(args) => commands::select(&config, args),
        Command::Eval(args) => commands::eval(&config, args),
        Command::Report(args) => commands::report(&config, args),
        Command::Scatter(args) => commands::scatter(&config, args),
        Command::Synth(args) => commands::synth(&config, args),
    };
    match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} workers: {e}")))?
            .install(go),
        None => go(),
    }
}
