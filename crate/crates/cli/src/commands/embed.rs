//! `pcr embed`: produce query and candidate vector stores with the
//! configured provider.

use pcr_core::corpus::Collection;
use pcr_core::dense::{
    embed_collection_with, save_store, ChunkPoolingConfig, EmbeddingProvider, HttpEmbedder,
    HttpEmbedderConfig, MockEmbedder, Pooling, VectorStore,
};

use super::{ensure_dir, load_dataset};
use crate::config::{ProjectConfig, ProviderKind, ENV_EMBED_MODEL, ENV_EMBED_URL};
use crate::CliError;

fn make_provider(config: &ProjectConfig) -> Result<Box<dyn EmbeddingProvider>, CliError> {
    let section = &config.embedding;
    match section.provider {
        ProviderKind::Mock => Ok(Box::new(MockEmbedder::new(
            section.dim,
            config.tokenizer()?,
        )?)),
        ProviderKind::Http => {
            let url = std::env::var(ENV_EMBED_URL)
                .ok()
                .or_else(|| section.url.clone())
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "http provider needs an endpoint: set {ENV_EMBED_URL} or [embedding] url"
                    ))
                })?;
            let model = std::env::var(ENV_EMBED_MODEL)
                .ok()
                .or_else(|| section.model.clone())
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "http provider needs a model name: set {ENV_EMBED_MODEL} or [embedding] model"
                    ))
                })?;
            let mut http = HttpEmbedderConfig::new(url, model, section.dim);
            http.batch_size = section.batch_size;
            http.max_input_words = section.max_input_words;
            Ok(Box::new(HttpEmbedder::new(http)?))
        }
    }
}

fn embed_side(
    label: &str,
    docs: &Collection,
    provider: &dyn EmbeddingProvider,
    config: &ProjectConfig,
) -> Result<VectorStore, CliError> {
    let pooling = ChunkPoolingConfig {
        enabled: config.embedding.pooling.enabled,
        chunk_words: config.embedding.pooling.chunk_words,
        pooling: Pooling::Mean,
    };
    let store = embed_collection_with(docs, provider, &pooling, config.embedding.max_in_flight)?;
    let path = config.store_path(label);
    save_store(&store, &path)?;
    println!(
        "embedded {} {} -> {} (dim {})",
        store.len(),
        label,
        path.display(),
        store.dim()
    );
    Ok(store)
}

pub fn run(config: ProjectConfig) -> Result<(), CliError> {
    let dataset = load_dataset(&config)?;
    let provider = make_provider(&config)?;
    ensure_dir(&config.output.dir)?;
    embed_side("queries", &dataset.queries, provider.as_ref(), &config)?;
    embed_side(
        "candidates",
        &dataset.candidates,
        provider.as_ref(),
        &config,
    )?;
    Ok(())
}
