//! Embedding acquisition and exact cosine top-k retrieval.
//!
//! All stored vectors are L2-normalized at ingestion, so cosine similarity
//! reduces to a dot product. Retrieval is exact: every candidate is scored
//! and sorted, no approximate structures.

mod http;
mod mock;
mod store;

pub use http::{HttpEmbedder, HttpEmbedderConfig};
pub use mock::{mock_embed, MockEmbedder};
pub use store::{load_store, load_store_jsonl, save_store};

use std::collections::{HashMap, HashSet};

use crate::corpus::Collection;
use crate::error::{Error, Result};
use unicode_segmentation::UnicodeSegmentation;

/// Largest allowed deviation of a stored vector's L2 norm from 1.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-5;

/// A fixed-dimension, unit-normalized embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f32>,
}

impl EmbeddingVector {
    /// Normalize a raw provider output. Errors on non-finite entries and on
    /// vectors with zero norm.
    pub fn normalized(raw: Vec<f32>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidParam("zero-dimensional vector".into()));
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidRecord("non-finite vector entry".into()));
        }
        let norm = l2_norm(&raw);
        if norm == 0.0 {
            return Err(Error::ZeroVector("vector has zero norm".into()));
        }
        let values = raw.iter().map(|&v| (f64::from(v) / norm) as f32).collect();
        Ok(EmbeddingVector { values })
    }

    /// Accept a vector that is already unit-normalized (within
    /// [`UNIT_NORM_TOLERANCE`]) without touching its bits.
    pub fn from_unit(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParam("zero-dimensional vector".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidRecord("non-finite vector entry".into()));
        }
        let norm = l2_norm(&values);
        if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(Error::InvalidRecord(format!(
                "vector norm {norm} is not unit within {UNIT_NORM_TOLERANCE}"
            )));
        }
        Ok(EmbeddingVector { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.values)
    }
}

fn l2_norm(values: &[f32]) -> f64 {
    values
        .iter()
        .map(|&v| f64::from(v) * f64::from(v))
        .sum::<f64>()
        .sqrt()
}

/// Cosine similarity of two stored vectors: a dot product accumulated in
/// index order (so `cosine(a, b) == cosine(b, a)` exactly), clamped to
/// `[-1, 1]`.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            expected: a.dim(),
            actual: b.dim(),
            context: "cosine".into(),
        });
    }
    let mut dot = 0.0f64;
    for (x, y) in a.values.iter().zip(&b.values) {
        dot += f64::from(*x) * f64::from(*y);
    }
    Ok(dot.clamp(-1.0, 1.0))
}

/// Where a store's vectors came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub provider: String,
    pub model: String,
}

impl Provenance {
    pub fn new(provider: impl Into<String>, model: impl Into<String>) -> Self {
        Provenance {
            provider: provider.into(),
            model: model.into(),
        }
    }
}

/// Unit-normalized embeddings keyed by document id, all sharing one
/// dimension. Insertion order is preserved; immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorStore {
    dim: usize,
    provenance: Provenance,
    ids: Vec<String>,
    vectors: Vec<EmbeddingVector>,
    by_id: HashMap<String, usize>,
}

impl VectorStore {
    pub fn new(dim: usize, provenance: Provenance) -> Self {
        VectorStore {
            dim,
            provenance,
            ids: Vec::new(),
            vectors: Vec::new(),
            by_id: HashMap::new(),
        }
    }

    pub fn insert(&mut self, id: String, vector: EmbeddingVector) -> Result<()> {
        if vector.dim() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                actual: vector.dim(),
                context: format!("vector for {id:?}"),
            });
        }
        if self.by_id.contains_key(&id) {
            return Err(Error::DuplicateId {
                id,
                context: "vector store".into(),
            });
        }
        self.by_id.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.vectors.push(vector);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&EmbeddingVector> {
        self.by_id.get(id).map(|&i| &self.vectors[i])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Entries in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &EmbeddingVector)> {
        self.ids.iter().map(String::as_str).zip(self.vectors.iter())
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.ids.iter().map(String::as_str)
    }
}

/// The `k` highest-cosine entries not in `exclude`, ordered score
/// descending with ties broken by doc id ascending. Returns fewer than `k`
/// entries when the store is smaller.
pub fn top_k(
    query: &EmbeddingVector,
    store: &VectorStore,
    k: usize,
    exclude: &HashSet<String>,
) -> Result<Vec<(String, f64)>> {
    if query.dim() != store.dim() {
        return Err(Error::DimMismatch {
            expected: store.dim(),
            actual: query.dim(),
            context: "top_k query vector".into(),
        });
    }
    let mut scored: Vec<(String, f64)> = Vec::with_capacity(store.len());
    for (id, vector) in store.iter() {
        if exclude.contains(id) {
            continue;
        }
        let score = cosine(query, vector).expect("store vectors share dim");
        scored.push((id.to_string(), score));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored)
}

/// Source of raw embedding vectors. Implementations must be shareable
/// across the bounded pool of embedding workers.
pub trait EmbeddingProvider: Sync {
    fn name(&self) -> &str;
    fn model(&self) -> &str;
    /// Output dimension; every returned vector has exactly this length.
    fn dim(&self) -> usize;
    /// Capacity hint: inputs longer than this (in words) are subject to
    /// provider-side truncation unless chunk pooling is enabled.
    fn max_input_words(&self) -> usize;
    /// Raw (pre-normalization) embeddings, one per input, in input order.
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f32>>>;
}

/// Chunk pooling (only meaningful strategy: mean).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    #[default]
    Mean,
}

/// Over-length handling for [`embed_collection`]. Disabled by default:
/// text passes to the provider verbatim and truncation is the provider's
/// business. When enabled, texts longer than `chunk_words` are split into
/// consecutive non-overlapping chunks, each chunk embedded, and the mean
/// vector renormalized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkPoolingConfig {
    pub enabled: bool,
    /// Words per chunk; `None` means the provider's `max_input_words`.
    pub chunk_words: Option<usize>,
    pub pooling: Pooling,
}

impl ChunkPoolingConfig {
    pub fn disabled() -> Self {
        ChunkPoolingConfig {
            enabled: false,
            chunk_words: None,
            pooling: Pooling::Mean,
        }
    }

    pub fn mean(chunk_words: Option<usize>) -> Result<Self> {
        if chunk_words == Some(0) {
            return Err(Error::InvalidParam("chunk_words must be >= 1".into()));
        }
        Ok(ChunkPoolingConfig {
            enabled: true,
            chunk_words,
            pooling: Pooling::Mean,
        })
    }
}

/// Default bound on concurrent provider requests.
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

/// Embed every document in `docs`, one vector per id, normalized before
/// storage. See [`embed_collection_with`] for the concurrency bound.
pub fn embed_collection<P: EmbeddingProvider + ?Sized>(
    docs: &Collection,
    provider: &P,
    pooling: &ChunkPoolingConfig,
) -> Result<VectorStore> {
    embed_collection_with(docs, provider, pooling, DEFAULT_MAX_IN_FLIGHT)
}

/// Embed a collection with at most `max_in_flight` provider requests in
/// flight. Results are assembled in document position order regardless of
/// completion order, so the output store is deterministic. On failure no
/// store is produced: workers stop picking up documents and one failing
/// document's error is returned (which one can depend on scheduling).
pub fn embed_collection_with<P: EmbeddingProvider + ?Sized>(
    docs: &Collection,
    provider: &P,
    pooling: &ChunkPoolingConfig,
    max_in_flight: usize,
) -> Result<VectorStore> {
    if docs.is_empty() {
        return Err(Error::EmptyCollection("nothing to embed".into()));
    }
    if max_in_flight == 0 {
        return Err(Error::InvalidParam("max_in_flight must be >= 1".into()));
    }
    if pooling.chunk_words == Some(0) {
        return Err(Error::InvalidParam("chunk_words must be >= 1".into()));
    }

    let texts: Vec<&str> = docs.iter().map(|d| d.text.as_str()).collect();
    let ids: Vec<&str> = docs.iter().map(|d| d.id.as_str()).collect();
    let vectors = embed_texts(&texts, provider, pooling, max_in_flight, |i| {
        ids[i].to_string()
    })?;

    let mut vector_store = VectorStore::new(
        provider.dim(),
        Provenance::new(provider.name(), provider.model()),
    );
    for (doc, vector) in docs.iter().zip(vectors) {
        vector_store.insert(doc.id.clone(), vector)?;
    }
    Ok(vector_store)
}

fn embed_texts<P: EmbeddingProvider + ?Sized>(
    texts: &[&str],
    provider: &P,
    pooling: &ChunkPoolingConfig,
    max_in_flight: usize,
    describe: impl Fn(usize) -> String,
) -> Result<Vec<EmbeddingVector>> {
    let mut results = run_bounded(texts, max_in_flight, |text| {
        embed_one(text, provider, pooling)
    });
    // report the failure at the smallest processed position; other slots
    // may be unprocessed because workers stop after the first error
    if let Some(i) = results.iter().position(|r| matches!(r, Some(Err(_)))) {
        let Some(Err(err)) = results[i].take() else {
            unreachable!()
        };
        return Err(annotate_doc(err, &describe(i)));
    }
    Ok(results
        .into_iter()
        .map(|slot| {
            slot.expect("no error implies every slot was embedded")
                .expect("error slots handled above")
        })
        .collect())
}

fn annotate_doc(err: Error, id: &str) -> Error {
    match err {
        Error::Provider(msg) => Error::Provider(format!("doc {id:?}: {msg}")),
        Error::ZeroVector(msg) => Error::ZeroVector(format!("doc {id:?}: {msg}")),
        Error::DimMismatch {
            expected,
            actual,
            context,
        } => Error::DimMismatch {
            expected,
            actual,
            context: format!("doc {id:?}: {context}"),
        },
        other => other,
    }
}

/// Embed one text: single provider call, or chunk + mean-pool + renormalize
/// when pooling is enabled and the text is longer than the chunk size.
fn embed_one<P: EmbeddingProvider + ?Sized>(
    text: &str,
    provider: &P,
    pooling: &ChunkPoolingConfig,
) -> Result<EmbeddingVector> {
    let chunk_words = pooling
        .chunk_words
        .unwrap_or_else(|| provider.max_input_words());
    let chunks = if pooling.enabled {
        split_chunks(text, chunk_words)
    } else {
        vec![text.to_string()]
    };
    let raw = provider.embed_batch(&chunks)?;
    if raw.len() != chunks.len() {
        return Err(Error::Provider(format!(
            "provider returned {} vectors for {} inputs",
            raw.len(),
            chunks.len()
        )));
    }
    let mut acc = vec![0.0f64; provider.dim()];
    for vector in &raw {
        if vector.len() != provider.dim() {
            return Err(Error::DimMismatch {
                expected: provider.dim(),
                actual: vector.len(),
                context: "provider output".into(),
            });
        }
        for (slot, &v) in acc.iter_mut().zip(vector) {
            *slot += f64::from(v);
        }
    }
    let n = raw.len() as f64;
    let mean: Vec<f32> = acc.into_iter().map(|v| (v / n) as f32).collect();
    EmbeddingVector::normalized(mean).map_err(|e| annotate_pooling(e, chunks.len()))
}

fn annotate_pooling(err: Error, n_chunks: usize) -> Error {
    match err {
        Error::ZeroVector(msg) if n_chunks > 1 => {
            Error::ZeroVector(format!("{msg} (mean over {n_chunks} chunks)"))
        }
        other => other,
    }
}

/// Split into consecutive non-overlapping chunks of at most `chunk_words`
/// words, preserving the original byte spans (surrounding punctuation and
/// whitespace stay with their chunk).
fn split_chunks(text: &str, chunk_words: usize) -> Vec<String> {
    debug_assert!(chunk_words >= 1);
    let starts: Vec<usize> = text.unicode_word_indices().map(|(i, _)| i).collect();
    if starts.len() <= chunk_words {
        return vec![text.to_string()];
    }
    let mut chunks = Vec::with_capacity(starts.len() / chunk_words + 1);
    let mut begin = starts[0];
    let mut next = chunk_words;
    while next < starts.len() {
        chunks.push(text[begin..starts[next]].to_string());
        begin = starts[next];
        next += chunk_words;
    }
    chunks.push(text[begin..].to_string());
    chunks
}

/// Apply `job` to every item with at most `max_in_flight` invocations in
/// flight. Slots are filled by item position; after the first failure,
/// workers stop picking up new items, so trailing slots may stay `None`.
#[cfg(feature = "parallel")]
fn run_bounded<T: Sync, U: Send>(
    items: &[T],
    max_in_flight: usize,
    job: impl Fn(&T) -> Result<U> + Sync,
) -> Vec<Option<Result<U>>> {
    use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
    use std::sync::mpsc;

    let workers = max_in_flight.min(items.len()).max(1);
    if workers == 1 {
        return run_bounded_sequential(items, job);
    }
    let cursor = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let cursor = &cursor;
            let failed = &failed;
            let job = &job;
            scope.spawn(move || loop {
                if failed.load(Ordering::Relaxed) {
                    return;
                }
                let i = cursor.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    return;
                }
                let result = job(&items[i]);
                if result.is_err() {
                    failed.store(true, Ordering::Relaxed);
                }
                if tx.send((i, result)).is_err() {
                    return;
                }
            });
        }
        drop(tx);
        let mut out: Vec<Option<Result<U>>> = (0..items.len()).map(|_| None).collect();
        for (i, result) in rx {
            out[i] = Some(result);
        }
        out
    })
}

fn run_bounded_sequential<T: Sync, U: Send>(
    items: &[T],
    job: impl Fn(&T) -> Result<U> + Sync,
) -> Vec<Option<Result<U>>> {
    let mut out: Vec<Option<Result<U>>> = (0..items.len()).map(|_| None).collect();
    for (i, item) in items.iter().enumerate() {
        let result = job(item);
        let stop = result.is_err();
        out[i] = Some(result);
        if stop {
            break;
        }
    }
    out
}

#[cfg(not(feature = "parallel"))]
fn run_bounded<T: Sync, U: Send>(
    items: &[T],
    _max_in_flight: usize,
    job: impl Fn(&T) -> Result<U> + Sync,
) -> Vec<Option<Result<U>>> {
    run_bounded_sequential(items, job)
}
