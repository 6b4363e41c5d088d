//! `pcr` — batch pipeline for prior-case retrieval experiments:
//! ingest -> build-bm25 / embed -> retrieve -> evaluate -> report.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 data error,
//! 3 provider or IO error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::BackendKind;

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or configuration (exit 1).
    Usage(String),
    /// Structurally valid inputs that cannot be processed (exit 2).
    Data(String),
    /// Filesystem trouble outside the core pipeline (exit 3).
    Io(String),
    /// Anything from the core pipeline; exit code depends on the variant.
    Core(pcr_core::Error),
}

impl From<pcr_core::Error> for CliError {
    fn from(e: pcr_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Data(msg) | CliError::Io(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use pcr_core::Error as E;
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Io(_) => 3,
            CliError::Core(e) => match e {
                E::Io { .. } | E::Provider(_) => 3,
                E::InvalidParam(_) => 1,
                _ => 2,
            },
        }
    }
}

#[derive(Parser)]
#[command(
    name = "pcr",
    version,
    about = "Prior-case retrieval: BM25 and dense-embedding ranking with IR evaluation"
)]
struct Cli {
    /// Experiment manifest (TOML).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate the dataset; print counts, word statistics and
    /// consistency findings.
    Ingest,
    /// Build the BM25 inverted index and write it to the output directory.
    BuildBm25,
    /// Embed queries and candidates with the configured provider and
    /// write both vector stores.
    Embed,
    /// Rank every query against the candidate pool and write a TREC run.
    Retrieve {
        /// Override the configured backend (bm25 | dense).
        #[arg(long)]
        backend: Option<BackendKind>,
        /// Override self-match exclusion.
        #[arg(long, value_name = "BOOL")]
        exclude_self: Option<bool>,
        /// Override the run file path.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Score a run against judgments; print the summary table and write a
    /// JSON report.
    Evaluate {
        /// Run file (default: the configured backend's run in the output
        /// directory).
        #[arg(long, value_name = "FILE")]
        run: Option<PathBuf>,
        /// Qrels file (default: from the manifest).
        #[arg(long, value_name = "FILE")]
        qrels: Option<PathBuf>,
        /// Cutoff grid override, e.g. `--k 1,5,10`.
        #[arg(long, value_name = "LIST")]
        k: Option<String>,
        /// Label for the report row (default: backend name).
        #[arg(long)]
        name: Option<String>,
        /// Report output path (default: `<out>/<name>.eval.json`).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Merge evaluation reports into a comparison table and curve CSV.
    Report {
        /// Report JSON files produced by `evaluate`.
        #[arg(required = true, value_name = "REPORT")]
        reports: Vec<PathBuf>,
        /// Curve CSV path (default: curves.csv next to the first report).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest => commands::ingest::run(require_config(&cli.config)?),
        Command::BuildBm25 => commands::build::run(require_config(&cli.config)?),
        Command::Embed => commands::embed::run(require_config(&cli.config)?),
        Command::Retrieve {
            backend,
            exclude_self,
            out,
        } => commands::retrieve::run(require_config(&cli.config)?, backend, exclude_self, out),
        Command::Evaluate {
            run,
            qrels,
            k,
            name,
            out,
        } => commands::evaluate::run(cli.config.as_deref(), run, qrels, k, name, out),
        Command::Report { reports, out } => commands::report::run(&reports, out),
    }
}

fn require_config(path: &Option<PathBuf>) -> Result<config::ProjectConfig, CliError> {
    let path = path
        .as_ref()
        .ok_or_else(|| CliError::Usage("this command needs --config <FILE>".into()))?;
    config::ProjectConfig::load(path)
}

/// Die quietly when stdout is a closed pipe (`pcr ... | head`), like any
/// other unix filter, instead of panicking on the first print.
#[cfg(unix)]
fn reset_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn main() -> ExitCode {
    reset_sigpipe();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not errors
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
