//! Subcommand implementations and shared helpers.

pub mod build;
pub mod embed;
pub mod evaluate;
pub mod ingest;
pub mod report;
pub mod retrieve;

use std::path::Path;

use serde::{Deserialize, Serialize};

use pcr_core::corpus::{load_collection, load_qrels, CollectionKind, Dataset};
use pcr_core::eval::EvalReport;

use crate::config::ProjectConfig;
use crate::CliError;

/// An evaluation report with the label it is compared under.
#[derive(Debug, Serialize, Deserialize)]
pub struct NamedReport {
    pub name: String,
    #[serde(flatten)]
    pub report: EvalReport,
}

pub(crate) fn load_dataset(config: &ProjectConfig) -> Result<Dataset, CliError> {
    let queries = load_collection(&config.dataset.queries, CollectionKind::Queries)?;
    let candidates = load_collection(&config.dataset.candidates, CollectionKind::Candidates)?;
    let qrels = load_qrels(&config.dataset.qrels)?;
    Ok(Dataset::new(
        config.name.clone(),
        queries,
        candidates,
        qrels,
    ))
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

/// Temp-then-rename write for CLI-owned artifacts (reports, tables).
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    let io_err = |e: std::io::Error| CliError::Io(format!("cannot write {}: {e}", path.display()));
    std::fs::write(&tmp, bytes).map_err(io_err)?;
    std::fs::rename(&tmp, path).map_err(io_err)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut body = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Data(format!("cannot serialize report: {e}")))?;
    body.push('\n');
    write_atomic(path, body.as_bytes())
}

/// Header of the model comparison table: MAP, best F, and its k.
pub(crate) fn summary_header() -> String {
    format!("{:<20} {:>8} {:>8} {:>5}", "model", "MAP", "F", "k")
}

pub(crate) fn summary_row(name: &str, report: &EvalReport) -> String {
    format!(
        "{:<20} {:>8.4} {:>8.4} {:>5}",
        name, report.map, report.best_f.f, report.best_f.k
    )
}
