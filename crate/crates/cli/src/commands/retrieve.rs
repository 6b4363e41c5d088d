//! `pcr retrieve`: rank all queries with the chosen backend and write a
//! TREC run file.

use std::path::PathBuf;

use pcr_core::bm25::{load_index, Bm25Params};
use pcr_core::dense::load_store;
use pcr_core::ranker::{run as rank, write_run, Backend, RunOptions};

use super::{ensure_dir, load_dataset};
use crate::config::{BackendKind, ProjectConfig};
use crate::CliError;

pub fn run(
    config: ProjectConfig,
    backend: Option<BackendKind>,
    exclude_self: Option<bool>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let backend_kind = backend.unwrap_or(config.backend);
    let dataset = load_dataset(&config)?;
    let opts = RunOptions {
        exclude_self: exclude_self.unwrap_or(config.exclude_self),
        tag: config.output.tag.clone(),
    };

    let produced = match backend_kind {
        BackendKind::Bm25 => {
            let path = config.index_path();
            if !path.exists() {
                return Err(CliError::Data(format!(
                    "no BM25 index at {}; run `pcr build-bm25` first",
                    path.display()
                )));
            }
            let index = load_index(&path)?;
            let params = Bm25Params::new(config.bm25.k1, config.bm25.b)?;
            let tokenizer = config.tokenizer()?;
            let backend = Backend::Bm25 {
                index: &index,
                params,
                tokenizer: &tokenizer,
            };
            rank(&dataset, &backend, &opts)?
        }
        BackendKind::Dense => {
            let query_path = config.store_path("queries");
            let candidate_path = config.store_path("candidates");
            if !query_path.exists() || !candidate_path.exists() {
                return Err(CliError::Data(format!(
                    "missing vector store {} or {}; run `pcr embed` first",
                    query_path.display(),
                    candidate_path.display()
                )));
            }
            let queries = load_store(&query_path)?;
            let candidates = load_store(&candidate_path)?;
            let backend = Backend::Dense {
                queries: &queries,
                candidates: &candidates,
            };
            rank(&dataset, &backend, &opts)?
        }
    };

    let path = out.unwrap_or_else(|| config.run_path(backend_kind));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    write_run(&produced, &path, &opts.tag)?;
    println!(
        "ranked {} queries over {} candidates ({})",
        produced.len(),
        dataset.candidates.len(),
        backend_kind.as_str()
    );
    println!("wrote {}", path.display());
    Ok(())
}
