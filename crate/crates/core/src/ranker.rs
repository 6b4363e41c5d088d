//! End-to-end ranking orchestration: runs a retrieval backend over every
//! query in a dataset and reads/writes TREC-format run files.
//!
//! Queries are independent, so per-query ranking executes in parallel when
//! the `parallel` feature is enabled; output is assembled in query-id order
//! either way, so runs are deterministic.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::bm25::{self, Bm25Params, InvertedIndex};
use crate::corpus::Dataset;
use crate::dense::{top_k, VectorStore};
use crate::error::{Error, Result};
use crate::io_util::atomic_write;
use crate::tokenize::TokenizerConfig;

/// One ranked retrieval result.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedItem {
    pub doc_id: String,
    pub score: f64,
    /// 1-based rank.
    pub rank: u32,
}

/// A full ranking of candidates for one query: ranks are contiguous from 1,
/// scores non-increasing, ties ordered by doc id ascending, no duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    query_id: String,
    items: Vec<RankedItem>,
}

impl RankedList {
    /// Sort scored candidates (score descending, doc id ascending) and
    /// assign ranks. Rejects duplicate doc ids and non-finite scores.
    pub fn from_scored(query_id: &str, mut scored: Vec<(String, f64)>) -> Result<Self> {
        if let Some((id, s)) = scored.iter().find(|(_, s)| !s.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite score {s} for doc {id:?} (query {query_id:?})"
            )));
        }
        let mut seen = HashSet::with_capacity(scored.len());
        for (id, _) in &scored {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId {
                    id: id.clone(),
                    context: format!("ranked list for query {query_id:?}"),
                });
            }
        }
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let items = scored
            .into_iter()
            .enumerate()
            .map(|(i, (doc_id, score))| RankedItem {
                doc_id,
                score,
                rank: i as u32 + 1,
            })
            .collect();
        Ok(RankedList {
            query_id: query_id.to_string(),
            items,
        })
    }

    pub fn query_id(&self) -> &str {
        &self.query_id
    }

    pub fn items(&self) -> &[RankedItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Doc ids in rank order.
    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|i| i.doc_id.as_str())
    }
}

/// Retrieval backend with its prebuilt artifacts.
pub enum Backend<'a> {
    Bm25 {
        index: &'a InvertedIndex,
        params: Bm25Params,
        tokenizer: &'a TokenizerConfig,
    },
    Dense {
        queries: &'a VectorStore,
        candidates: &'a VectorStore,
    },
}

impl Backend<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Bm25 { .. } => "bm25",
            Backend::Dense { .. } => "dense",
        }
    }
}

/// Run-level options.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Drop a candidate whose id equals the query id exactly.
    pub exclude_self: bool,
    /// Tag written in the last run-file column.
    pub tag: String,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            exclude_self: true,
            tag: "pcr".into(),
        }
    }
}

/// A complete run: one ranked list per query, keyed by query id.
pub type Run = BTreeMap<String, RankedList>;

fn check_backend(dataset: &Dataset, backend: &Backend) -> Result<()> {
    match backend {
        Backend::Bm25 { index, .. } => {
            let missing: Vec<&str> = dataset
                .candidates
                .ids()
                .filter(|id| !index.contains_doc(id))
                .collect();
            if !missing.is_empty() || index.n_docs() != dataset.candidates.len() {
                return Err(Error::InvalidData(format!(
                    "index does not match candidate pool ({} docs indexed, {} in dataset, missing: {:?})",
                    index.n_docs(),
                    dataset.candidates.len(),
                    missing
                )));
            }
        }
        Backend::Dense {
            queries,
            candidates,
        } => {
            if queries.dim() != candidates.dim() {
                return Err(Error::DimMismatch {
                    expected: candidates.dim(),
                    actual: queries.dim(),
                    context: "query store vs candidate store".into(),
                });
            }
            let mut missing: Vec<String> = dataset
                .queries
                .ids()
                .filter(|id| queries.get(id).is_none())
                .map(|id| format!("query {id}"))
                .collect();
            missing.extend(
                dataset
                    .candidates
                    .ids()
                    .filter(|id| candidates.get(id).is_none())
                    .map(|id| format!("candidate {id}")),
            );
            if !missing.is_empty() {
                return Err(Error::InvalidData(format!(
                    "missing embeddings for {} documents: {}",
                    missing.len(),
                    missing.join(", ")
                )));
            }
        }
    }
    Ok(())
}

fn rank_one(query_id: &str, dataset: &Dataset, backend: &Backend, opts: &RunOptions) -> RankedList {
    let exclude: HashSet<String> = if opts.exclude_self {
        std::iter::once(query_id.to_string()).collect()
    } else {
        HashSet::new()
    };
    match backend {
        Backend::Bm25 {
            index,
            params,
            tokenizer,
        } => {
            let query = dataset
                .queries
                .get(query_id)
                .expect("query id from dataset");
            let full = bm25::search(query, index, params, tokenizer);
            if exclude.is_empty() {
                full
            } else {
                let scored = full
                    .items()
                    .iter()
                    .filter(|item| !exclude.contains(&item.doc_id))
                    .map(|item| (item.doc_id.clone(), item.score))
                    .collect();
                RankedList::from_scored(query_id, scored).expect("filtered list stays valid")
            }
        }
        Backend::Dense {
            queries,
            candidates,
        } => {
            let vector = queries.get(query_id).expect("checked by check_backend");
            let scored = top_k(vector, candidates, candidates.len(), &exclude)
                .expect("dimensions checked by check_backend");
            RankedList::from_scored(query_id, scored).expect("store ids are unique")
        }
    }
}

/// Rank every query against the full candidate pool (minus exclusions).
/// Deterministic across invocations and thread counts.
pub fn run(dataset: &Dataset, backend: &Backend, opts: &RunOptions) -> Result<Run> {
    #[cfg(feature = "parallel")]
    {
        check_backend(dataset, backend)?;
        let lists: Vec<(String, RankedList)> = dataset
            .queries
            .iter()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|query| {
                (
                    query.id.clone(),
                    rank_one(&query.id, dataset, backend, opts),
                )
            })
            .collect();
        Ok(lists.into_iter().collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_sequential(dataset, backend, opts)
    }
}

/// Single-threaded equivalent of [`run`]; same output bytes.
pub fn run_sequential(dataset: &Dataset, backend: &Backend, opts: &RunOptions) -> Result<Run> {
    check_backend(dataset, backend)?;
    Ok(dataset
        .queries
        .iter()
        .map(|query| {
            (
                query.id.clone(),
                rank_one(&query.id, dataset, backend, opts),
            )
        })
        .collect())
}

/// Write a run in TREC format: `query_id Q0 doc_id rank score tag`, scores
/// with 6 decimal places, queries in id order. Refuses to write an empty
/// run.
pub fn write_run(run: &Run, path: impl AsRef<Path>, tag: &str) -> Result<()> {
    if run.is_empty() {
        return Err(Error::InvalidData("refusing to write empty run".into()));
    }
    let mut buf = Vec::new();
    for (query_id, list) in run {
        for item in list.items() {
            writeln!(
                buf,
                "{query_id} Q0 {} {} {:.6} {tag}",
                item.doc_id, item.rank, item.score
            )
            .expect("write to vec");
        }
    }
    atomic_write(path.as_ref(), &buf)
}

/// Parse a TREC run file back into ranked lists. Ranks must be contiguous
/// from 1 per query; order and ranks survive the round-trip, scores to the
/// printed precision.
pub fn read_run(path: impl AsRef<Path>) -> Result<Run> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut per_query: BTreeMap<String, Vec<(String, f64, u32)>> = BTreeMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::malformed(
                &shown,
                lineno,
                format!("expected 6 fields, found {}", fields.len()),
            ));
        }
        let rank: u32 = fields[3]
            .parse()
            .map_err(|_| Error::malformed(&shown, lineno, format!("bad rank {:?}", fields[3])))?;
        let score: f64 = fields[4]
            .parse()
            .map_err(|_| Error::malformed(&shown, lineno, format!("bad score {:?}", fields[4])))?;
        per_query.entry(fields[0].to_string()).or_default().push((
            fields[2].to_string(),
            score,
            rank,
        ));
    }

    let mut run = Run::new();
    for (query_id, mut items) in per_query {
        items.sort_by_key(|(_, _, rank)| *rank);
        let mut seen = HashSet::new();
        for (i, (doc_id, _, rank)) in items.iter().enumerate() {
            if *rank != i as u32 + 1 {
                return Err(Error::InvalidData(format!(
                    "{shown}: query {query_id:?} has non-contiguous rank {rank} at position {}",
                    i + 1
                )));
            }
            if !seen.insert(doc_id.as_str()) {
                return Err(Error::DuplicateId {
                    id: doc_id.clone(),
                    context: format!("run file {shown}, query {query_id:?}"),
                });
            }
        }
        let items = items
            .into_iter()
            .map(|(doc_id, score, rank)| RankedItem {
                doc_id,
                score,
                rank,
            })
            .collect();
        run.insert(query_id.clone(), RankedList { query_id, items });
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Collection, Document, Qrels};
    use crate::dense::{embed_collection, ChunkPoolingConfig, MockEmbedder};

    fn toy_dataset() -> Dataset {
        let queries = Collection::from_documents(vec![
            Document::new("q1", "alpha beta gamma").unwrap(),
            Document::new("q2", "delta epsilon").unwrap(),
        ])
        .unwrap();
        let candidates = Collection::from_documents(vec![
            Document::new("c1", "alpha beta noise").unwrap(),
            Document::new("c2", "delta words here").unwrap(),
            Document::new("c3", "unrelated filler text").unwrap(),
        ])
        .unwrap();
        let mut qrels = Qrels::new();
        qrels.insert("q1", "c1");
        qrels.insert("q2", "c2");
        Dataset::new("toy", queries, candidates, qrels)
    }

    fn dense_stores(dataset: &Dataset) -> (VectorStore, VectorStore) {
        let embedder = MockEmbedder::new(64, TokenizerConfig::new()).unwrap();
        let pooling = ChunkPoolingConfig::disabled();
        (
            embed_collection(&dataset.queries, &embedder, &pooling).unwrap(),
            embed_collection(&dataset.candidates, &embedder, &pooling).unwrap(),
        )
    }

    #[test]
    fn from_scored_sorts_and_ranks() {
        let list = RankedList::from_scored(
            "q",
            vec![("b".into(), 1.0), ("a".into(), 1.0), ("c".into(), 2.0)],
        )
        .unwrap();
        let ids: Vec<&str> = list.doc_ids().collect();
        assert_eq!(ids, vec!["c", "a", "b"]);
        let ranks: Vec<u32> = list.items().iter().map(|i| i.rank).collect();
        assert_eq!(ranks, vec![1, 2, 3]);
    }

    #[test]
    fn from_scored_rejects_duplicates_and_nan() {
        assert!(RankedList::from_scored("q", vec![("a".into(), 1.0), ("a".into(), 0.5)]).is_err());
        assert!(RankedList::from_scored("q", vec![("a".into(), f64::NAN)]).is_err());
    }

    #[test]
    fn dense_run_is_full_permutation() {
        let dataset = toy_dataset();
        let (queries, candidates) = dense_stores(&dataset);
        let backend = Backend::Dense {
            queries: &queries,
            candidates: &candidates,
        };
        let run = run(&dataset, &backend, &RunOptions::default()).unwrap();
        assert_eq!(run.len(), 2);
        for list in run.values() {
            let mut ids: Vec<&str> = list.doc_ids().collect();
            ids.sort_unstable();
            assert_eq!(ids, vec!["c1", "c2", "c3"]);
        }
    }

    #[test]
    fn exclude_self_removes_exactly_own_id() {
        let mut dataset = toy_dataset();
        // make q1 also a candidate
        dataset
            .candidates
            .push(Document::new("q1", "alpha beta gamma").unwrap())
            .unwrap();
        let (queries, candidates) = dense_stores(&dataset);
        let backend = Backend::Dense {
            queries: &queries,
            candidates: &candidates,
        };
        let with = run(&dataset, &backend, &RunOptions::default()).unwrap();
        assert!(!with["q1"].doc_ids().any(|id| id == "q1"));
        assert!(with["q2"].doc_ids().any(|id| id == "q1"));
        assert_eq!(with["q1"].len(), 3);
        assert_eq!(with["q2"].len(), 4);

        let opts = RunOptions {
            exclude_self: false,
            ..RunOptions::default()
        };
        let without = run(&dataset, &backend, &opts).unwrap();
        assert!(without["q1"].doc_ids().any(|id| id == "q1"));
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let dataset = toy_dataset();
        let (queries, candidates) = dense_stores(&dataset);
        let backend = Backend::Dense {
            queries: &queries,
            candidates: &candidates,
        };
        let opts = RunOptions::default();
        let a = run(&dataset, &backend, &opts).unwrap();
        let b = run_sequential(&dataset, &backend, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dense_run_reports_all_missing_embeddings() {
        let dataset = toy_dataset();
        let (queries, candidates) = dense_stores(&dataset);
        let mut partial = VectorStore::new(candidates.dim(), candidates.provenance().clone());
        let (id, vector) = candidates.iter().next().unwrap();
        partial.insert(id.to_string(), vector.clone()).unwrap();
        let backend = Backend::Dense {
            queries: &queries,
            candidates: &partial,
        };
        let err = run(&dataset, &backend, &RunOptions::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("c2") && msg.contains("c3"), "{msg}");
    }

    #[test]
    fn bm25_run_and_write_read_round_trip() {
        let dataset = toy_dataset();
        let config = TokenizerConfig::new();
        let index = bm25::build_index(&dataset.candidates, &config).unwrap();
        let backend = Backend::Bm25 {
            index: &index,
            params: Bm25Params::default(),
            tokenizer: &config,
        };
        let produced = run(&dataset, &backend, &RunOptions::default()).unwrap();
        assert_eq!(produced["q1"].doc_ids().next(), Some("c1"));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.run");
        write_run(&produced, &path, "tag1").unwrap();
        let reread = read_run(&path).unwrap();
        assert_eq!(reread.len(), produced.len());
        for (query_id, list) in &produced {
            let other = &reread[query_id];
            for (a, b) in list.items().iter().zip(other.items()) {
                assert_eq!(a.doc_id, b.doc_id);
                assert_eq!(a.rank, b.rank);
                assert!((a.score - b.score).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn write_run_is_deterministic() {
        let dataset = toy_dataset();
        let config = TokenizerConfig::new();
        let index = bm25::build_index(&dataset.candidates, &config).unwrap();
        let backend = Backend::Bm25 {
            index: &index,
            params: Bm25Params::default(),
            tokenizer: &config,
        };
        let dir = tempfile::tempdir().unwrap();
        let (p1, p2) = (dir.path().join("a.run"), dir.path().join("b.run"));
        let opts = RunOptions::default();
        write_run(&run(&dataset, &backend, &opts).unwrap(), &p1, "t").unwrap();
        write_run(&run(&dataset, &backend, &opts).unwrap(), &p2, "t").unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn write_refuses_empty_run() {
        let dir = tempfile::tempdir().unwrap();
        let err = write_run(&Run::new(), dir.path().join("x.run"), "t").unwrap_err();
        assert!(err.to_string().contains("empty run"));
    }

    #[test]
    fn read_rejects_malformed_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.run");
        std::fs::write(&path, "q1 Q0 d1 1 0.5\n").unwrap(); // 5 fields
        let err = read_run(&path).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 1, .. }), "{err}");

        std::fs::write(&path, "q1 Q0 d1 one 0.5 tag\n").unwrap();
        assert!(read_run(&path).is_err());
    }

    #[test]
    fn read_rejects_non_contiguous_ranks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.run");
        std::fs::write(&path, "q1 Q0 d1 1 0.9 t\nq1 Q0 d2 3 0.8 t\n").unwrap();
        assert!(read_run(&path).is_err());
    }

    #[test]
    fn two_lines_for_one_query() {
        let list =
            RankedList::from_scored("q1", vec![("d1".into(), 0.9), ("d2".into(), 0.3)]).unwrap();
        let mut produced = Run::new();
        produced.insert("q1".into(), list);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("two.run");
        write_run(&produced, &path, "t").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "q1 Q0 d1 1 0.900000 t");
        assert_eq!(lines[1], "q1 Q0 d2 2 0.300000 t");
    }
}
