//! From-scratch BM25 inverted index and ranker.
//!
//! Scoring uses the smoothed non-negative idf variant
//! `idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))` with
//! `score = sum_t idf(t) * f(t,d) * (k1 + 1) / (f(t,d) + k1 * (1 - b + b * |d| / avgdl))`,
//! summed once per query-token occurrence. Defaults `k1 = 1.2`, `b = 0.75`.

mod io;

pub use io::{load_index, save_index};

use std::collections::HashMap;

use crate::corpus::{Collection, Document};
use crate::error::{Error, Result};
use crate::ranker::RankedList;
use crate::tokenize::{tokenize, TokenizerConfig};

/// BM25 free parameters, validated at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    k1: f64,
    b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    /// Requires `k1 >= 0` and `b` in `[0, 1]`.
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        if !k1.is_finite() || k1 < 0.0 {
            return Err(Error::InvalidParam(format!("k1 must be >= 0, got {k1}")));
        }
        if !b.is_finite() || !(0.0..=1.0).contains(&b) {
            return Err(Error::InvalidParam(format!("b must be in [0,1], got {b}")));
        }
        Ok(Bm25Params { k1, b })
    }

    pub fn k1(&self) -> f64 {
        self.k1
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

/// One postings entry: document ordinal and term frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

/// Inverted index over a candidate collection. Documents are ordered by
/// id ascending, so postings lists are ascending in both ordinal and id.
/// Immutable once built; concurrent scoring over a shared index is safe.
#[derive(Debug, Clone)]
pub struct InvertedIndex {
    doc_ids: Vec<String>,
    by_id: HashMap<String, u32>,
    doc_len: Vec<u32>,
    postings: HashMap<String, Vec<Posting>>,
    avgdl: f64,
}

impl InvertedIndex {
    fn from_parts(
        doc_ids: Vec<String>,
        doc_len: Vec<u32>,
        postings: HashMap<String, Vec<Posting>>,
        avgdl: f64,
    ) -> Self {
        let by_id = doc_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        InvertedIndex {
            doc_ids,
            by_id,
            doc_len,
            postings,
            avgdl,
        }
    }

    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    /// Mean tokenized document length.
    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    /// Number of documents containing `term`.
    pub fn df(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn postings(&self, term: &str) -> Option<&[Posting]> {
        self.postings.get(term).map(Vec::as_slice)
    }

    pub fn term_count(&self) -> usize {
        self.postings.len()
    }

    /// Document ids in index (ascending) order.
    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn ordinal(&self, doc_id: &str) -> Option<u32> {
        self.by_id.get(doc_id).copied()
    }

    pub fn doc_len(&self, ordinal: u32) -> u32 {
        self.doc_len[ordinal as usize]
    }

    pub fn contains_doc(&self, doc_id: &str) -> bool {
        self.by_id.contains_key(doc_id)
    }

    /// Smoothed non-negative inverse document frequency of `term`.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.n_docs() as f64;
        let df = self.df(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    fn tf(&self, term: &str, ordinal: u32) -> u32 {
        self.postings
            .get(term)
            .and_then(|list| {
                list.binary_search_by_key(&ordinal, |p| p.doc)
                    .ok()
                    .map(|i| list[i].tf)
            })
            .unwrap_or(0)
    }
}

/// Build an index over `candidates`, tokenizing with `config`. The same
/// tokenizer must be used for queries at search time.
pub fn build_index(candidates: &Collection, config: &TokenizerConfig) -> Result<InvertedIndex> {
    if candidates.is_empty() {
        return Err(Error::EmptyCollection("candidates".into()));
    }

    let mut docs: Vec<&Document> = candidates.iter().collect();
    docs.sort_by(|a, b| a.id.cmp(&b.id));

    let mut doc_ids = Vec::with_capacity(docs.len());
    let mut doc_len = Vec::with_capacity(docs.len());
    let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
    let mut total_len: u64 = 0;

    for (ordinal, doc) in docs.iter().enumerate() {
        let tokens = tokenize(&doc.text, config);
        doc_ids.push(doc.id.clone());
        doc_len.push(tokens.len() as u32);
        total_len += tokens.len() as u64;

        let mut counts: HashMap<String, u32> = HashMap::new();
        for token in tokens {
            *counts.entry(token).or_insert(0) += 1;
        }
        for (term, tf) in counts {
            postings.entry(term).or_default().push(Posting {
                doc: ordinal as u32,
                tf,
            });
        }
    }

    let avgdl = total_len as f64 / docs.len() as f64;
    Ok(InvertedIndex::from_parts(doc_ids, doc_len, postings, avgdl))
}

/// BM25 score of one document against a token sequence. Each query-token
/// occurrence contributes; tokens absent from the document contribute 0.
pub fn score(
    query_tokens: &[String],
    doc_id: &str,
    index: &InvertedIndex,
    params: &Bm25Params,
) -> Result<f64> {
    let ordinal = index
        .ordinal(doc_id)
        .ok_or_else(|| Error::UnknownDoc(doc_id.to_string()))?;
    let dl = index.doc_len(ordinal) as f64;
    let mut total = 0.0;
    for token in query_tokens {
        let tf = index.tf(token, ordinal);
        if tf == 0 {
            continue;
        }
        total += term_contribution(index.idf(token), tf as f64, dl, index.avgdl, params);
    }
    Ok(total)
}

#[inline]
fn term_contribution(idf: f64, tf: f64, dl: f64, avgdl: f64, params: &Bm25Params) -> f64 {
    let norm = 1.0 - params.b + params.b * dl / avgdl;
    idf * tf * (params.k1 + 1.0) / (tf + params.k1 * norm)
}

/// Rank the entire candidate pool against `query`. Ordered score
/// descending, ties broken by doc id ascending; zero-score documents form
/// the tail. A query that tokenizes to nothing yields all-zero scores.
pub fn search(
    query: &Document,
    index: &InvertedIndex,
    params: &Bm25Params,
    config: &TokenizerConfig,
) -> RankedList {
    let query_tokens = tokenize(&query.text, config);
    let mut counts: HashMap<&str, u32> = HashMap::new();
    for token in &query_tokens {
        *counts.entry(token.as_str()).or_insert(0) += 1;
    }
    // fixed term order so float accumulation is reproducible across runs
    let mut query_counts: Vec<(&str, u32)> = counts.into_iter().collect();
    query_counts.sort_unstable_by_key(|(term, _)| *term);

    let mut scores = vec![0.0f64; index.n_docs()];
    for (term, qtf) in query_counts {
        let Some(list) = index.postings(term) else {
            continue;
        };
        let idf = index.idf(term);
        for posting in list {
            let dl = index.doc_len(posting.doc) as f64;
            scores[posting.doc as usize] +=
                qtf as f64 * term_contribution(idf, posting.tf as f64, dl, index.avgdl, params);
        }
    }

    let scored = index
        .doc_ids
        .iter()
        .zip(&scores)
        .map(|(id, &s)| (id.clone(), s))
        .collect();
    RankedList::from_scored(&query.id, scored).expect("index doc ids are unique and finite-scored")
}
