//! `pcr report`: merge evaluation reports into a side-by-side comparison
//! table and a curve CSV plottable as F-vs-k per model.

use std::path::{Path, PathBuf};

use pcr_core::eval::emit_curves;

use super::{summary_header, summary_row, NamedReport};
use crate::CliError;

fn read_report(path: &Path) -> Result<NamedReport, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("bad report {}: {e}", path.display())))
}

pub fn run(paths: &[PathBuf], out: Option<PathBuf>) -> Result<(), CliError> {
    let named = paths
        .iter()
        .map(|p| read_report(p))
        .collect::<Result<Vec<NamedReport>, CliError>>()?;

    let out_path = out.unwrap_or_else(|| {
        paths[0]
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."))
            .join("curves.csv")
    });
    let pairs: Vec<(String, pcr_core::eval::EvalReport)> =
        named.into_iter().map(|r| (r.name, r.report)).collect();
    emit_curves(&pairs, &out_path)?;

    println!("{}", summary_header());
    for (name, report) in &pairs {
        println!("{}", summary_row(name, report));
    }
    println!("wrote {}", out_path.display());
    Ok(())
}
