//! `pcr build-bm25`: build and persist the inverted index.

use pcr_core::bm25::{build_index, save_index, Bm25Params};
use pcr_core::corpus::{load_collection, CollectionKind};

use super::ensure_dir;
use crate::config::ProjectConfig;
use crate::CliError;

pub fn run(config: ProjectConfig) -> Result<(), CliError> {
    // validate params early so a bad manifest fails before any IO
    Bm25Params::new(config.bm25.k1, config.bm25.b)?;
    let tokenizer = config.tokenizer()?;
    let candidates = load_collection(&config.dataset.candidates, CollectionKind::Candidates)?;
    let index = build_index(&candidates, &tokenizer)?;

    ensure_dir(&config.output.dir)?;
    let path = config.index_path();
    save_index(&index, &path)?;
    println!(
        "indexed {} docs, {} terms, avgdl {:.2}",
        index.n_docs(),
        index.term_count(),
        index.avgdl()
    );
    println!("wrote {}", path.display());
    Ok(())
}
