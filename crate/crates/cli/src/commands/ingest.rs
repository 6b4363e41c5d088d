//! `pcr ingest`: dataset summary and consistency report.

use serde::Serialize;

use pcr_core::corpus::{compute_stats, validate, CorpusStats, ValidationReport};

use super::{ensure_dir, load_dataset, write_json};
use crate::config::ProjectConfig;
use crate::CliError;

#[derive(Serialize)]
struct IngestReport<'a> {
    name: &'a str,
    stats: &'a CorpusStats,
    validation: &'a ValidationReport,
}

pub fn run(config: ProjectConfig) -> Result<(), CliError> {
    let dataset = load_dataset(&config)?;
    let stats = compute_stats(&dataset)?;
    let report = validate(&dataset);

    ensure_dir(&config.output.dir)?;
    let path = config.output.dir.join("ingest-report.json");
    write_json(
        &path,
        &IngestReport {
            name: &dataset.name,
            stats: &stats,
            validation: &report,
        },
    )?;

    println!("dataset: {}", dataset.name);
    println!("  queries                 {}", stats.n_queries);
    println!("  candidates              {}", stats.n_candidates);
    println!("  avg words (queries)     {:.2}", stats.avg_query_words);
    println!("  avg words (candidates)  {:.2}", stats.avg_candidate_words);
    println!("  judged queries          {}", dataset.qrels.n_queries());

    if report.is_clean() {
        println!("validation: ok");
    } else {
        println!("validation:");
        let sections: [(&str, &Vec<String>); 4] = [
            (
                "qrels query ids missing from queries",
                &report.missing_query_ids,
            ),
            (
                "qrels doc ids missing from candidates",
                &report.missing_candidate_ids,
            ),
            (
                "queries with zero relevant docs",
                &report.zero_relevant_queries,
            ),
            (
                "query ids also present as candidates",
                &report.self_overlapping_ids,
            ),
        ];
        for (label, ids) in sections {
            if !ids.is_empty() {
                println!("  warning: {} ({}): {}", label, ids.len(), ids.join(" "));
            }
        }
    }

    println!("wrote {}", path.display());
    Ok(())
}
