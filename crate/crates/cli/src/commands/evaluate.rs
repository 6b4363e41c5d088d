//! `pcr evaluate`: score one run against judgments; print the summary and
//! per-cutoff table, write the JSON report.

use std::path::{Path, PathBuf};

use pcr_core::corpus::load_qrels;
use pcr_core::eval::{evaluate_run_with, FMode, KGrid};
use pcr_core::ranker::read_run;

use super::{summary_header, summary_row, write_json, NamedReport};
use crate::config::ProjectConfig;
use crate::CliError;

pub fn run(
    config_path: Option<&Path>,
    run_path: Option<PathBuf>,
    qrels_path: Option<PathBuf>,
    k: Option<String>,
    name: Option<String>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let config = config_path.map(ProjectConfig::load).transpose()?;

    let run_path = run_path
        .or_else(|| config.as_ref().map(|c| c.run_path(c.backend)))
        .ok_or_else(|| CliError::Usage("evaluate needs --run <FILE> or --config".into()))?;
    let qrels_path = qrels_path
        .or_else(|| config.as_ref().map(|c| c.dataset.qrels.clone()))
        .ok_or_else(|| CliError::Usage("evaluate needs --qrels <FILE> or --config".into()))?;

    let grid = match (&k, &config) {
        (Some(list), _) => KGrid::parse(list)?,
        (None, Some(c)) => match &c.k_grid {
            Some(ks) => KGrid::new(ks.clone())?,
            None => KGrid::default(),
        },
        (None, None) => KGrid::default(),
    };
    let f_mode = config
        .as_ref()
        .map(|c| c.eval.f_mode)
        .unwrap_or(FMode::Macro);

    let name = name
        .or_else(|| config.as_ref().map(|c| c.backend.as_str().to_string()))
        .or_else(|| {
            run_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
        })
        .unwrap_or_else(|| "run".into());

    let produced = read_run(&run_path)?;
    let qrels = load_qrels(&qrels_path)?;
    let report = evaluate_run_with(&produced, &qrels, &grid, f_mode)?;

    // land the artifact before any printing so a closed pipe cannot
    // swallow the report
    let out_path = out.unwrap_or_else(|| {
        let dir = config
            .as_ref()
            .map(|c| c.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        dir.join(format!("{name}.eval.json"))
    });
    let named = NamedReport { name, report };
    write_json(&out_path, &named)?;
    let NamedReport { name, report } = named;

    println!("{}", summary_header());
    println!("{}", summary_row(&name, &report));
    println!();
    println!(
        "{:>5} {:>10} {:>10} {:>10}",
        "k", "precision", "recall", "f"
    );
    for m in &report.per_k {
        println!(
            "{:>5} {:>10.4} {:>10.4} {:>10.4}",
            m.k, m.precision, m.recall, m.f
        );
    }
    println!();
    println!(
        "scored {} queries, skipped {} with no relevant docs",
        report.scored, report.skipped
    );
    println!("wrote {}", out_path.display());
    Ok(())
}
