//! Dataset ingestion: query/candidate collections, relevance judgments,
//! corpus statistics and consistency validation.
//!
//! Collections are stored one JSON object per line (`id`, `text`; unknown
//! fields ignored). Judgments use the 4-column TREC qrels layout
//! `query_id 0 doc_id relevance` with binary relevance.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io_util::atomic_write;
use crate::tokenize::word_count;

/// One court case: stable id plus full text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: String,
    /// Unicode-segmented word count of `text`, cached at construction.
    pub word_count: usize,
}

impl Document {
    /// Build a document, validating the id and text. Ids may not be empty
    /// or contain whitespace (they must survive the whitespace-delimited
    /// run and qrels formats); text may not be empty.
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Result<Self> {
        let id = id.into();
        let text = text.into();
        if id.is_empty() {
            return Err(Error::InvalidRecord("empty id".into()));
        }
        if id.chars().any(char::is_whitespace) {
            return Err(Error::InvalidRecord(format!(
                "id {id:?} contains whitespace"
            )));
        }
        if text.is_empty() {
            return Err(Error::InvalidRecord(format!("empty text for id {id:?}")));
        }
        let word_count = word_count(&text);
        Ok(Document {
            id,
            text,
            word_count,
        })
    }
}

/// Which side of a dataset a collection holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollectionKind {
    Queries,
    Candidates,
}

impl fmt::Display for CollectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CollectionKind::Queries => write!(f, "queries"),
            CollectionKind::Candidates => write!(f, "candidates"),
        }
    }
}

/// An ordered set of documents with unique ids. Immutable after load;
/// safe to share read-only across threads.
#[derive(Debug, Clone, Default)]
pub struct Collection {
    docs: Vec<Document>,
    by_id: HashMap<String, usize>,
}

impl Collection {
    pub fn new() -> Self {
        Collection::default()
    }

    pub fn from_documents(docs: Vec<Document>) -> Result<Self> {
        let mut collection = Collection::new();
        for doc in docs {
            collection.push(doc)?;
        }
        Ok(collection)
    }

    /// Append a document, rejecting duplicate ids.
    pub fn push(&mut self, doc: Document) -> Result<()> {
        if self.by_id.contains_key(&doc.id) {
            return Err(Error::DuplicateId {
                id: doc.id,
                context: "collection".into(),
            });
        }
        self.by_id.insert(doc.id.clone(), self.docs.len());
        self.docs.push(doc);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.by_id.get(id).map(|&i| &self.docs[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Documents in load order.
    pub fn iter(&self) -> std::slice::Iter<'_, Document> {
        self.docs.iter()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.docs.iter().map(|d| d.id.as_str())
    }
}

impl<'a> IntoIterator for &'a Collection {
    type Item = &'a Document;
    type IntoIter = std::slice::Iter<'a, Document>;

    fn into_iter(self) -> Self::IntoIter {
        self.docs.iter()
    }
}

#[derive(Serialize, Deserialize)]
struct DocRecord<'a> {
    id: std::borrow::Cow<'a, str>,
    text: std::borrow::Cow<'a, str>,
}

/// Load a JSONL collection. Order is preserved; word counts are populated.
pub fn load_collection(path: impl AsRef<Path>, kind: CollectionKind) -> Result<Collection> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut collection = Collection::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DocRecord = serde_json::from_str(&line)
            .map_err(|e| Error::malformed(&shown, lineno, format!("bad JSON record: {e}")))?;
        let doc = Document::new(record.id, record.text).map_err(|e| match e {
            Error::InvalidRecord(msg) => Error::malformed(&shown, lineno, msg),
            other => other,
        })?;
        collection.push(doc).map_err(|e| match e {
            Error::DuplicateId { id, .. } => Error::DuplicateId {
                id,
                context: format!("{kind} ({shown}:{lineno})"),
            },
            other => other,
        })?;
    }
    Ok(collection)
}

/// Write a collection back to JSONL. Reloading yields identical id/text
/// pairs in identical order.
pub fn save_collection(collection: &Collection, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    for doc in collection {
        let record = DocRecord {
            id: (&doc.id).into(),
            text: (&doc.text).into(),
        };
        serde_json::to_writer(&mut buf, &record)
            .map_err(|e| Error::InvalidRecord(format!("serialize {:?}: {e}", doc.id)))?;
        buf.push(b'\n');
    }
    atomic_write(path.as_ref(), &buf)
}

/// Binary relevance judgments: query id to the set of relevant candidates.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeSet<String>>,
}

impl Qrels {
    pub fn new() -> Self {
        Qrels::default()
    }

    pub fn insert(&mut self, query_id: impl Into<String>, doc_id: impl Into<String>) {
        self.judgments
            .entry(query_id.into())
            .or_default()
            .insert(doc_id.into());
    }

    /// Relevant candidates for a query, if any were judged relevant.
    pub fn relevant(&self, query_id: &str) -> Option<&BTreeSet<String>> {
        self.judgments.get(query_id)
    }

    pub fn n_queries(&self) -> usize {
        self.judgments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BTreeSet<String>)> {
        self.judgments.iter()
    }
}

/// Parse TREC-style qrels: `query_id 0 doc_id relevance`, whitespace
/// separated, relevance in {0,1}. Only relevance-1 pairs are stored;
/// duplicate pairs collapse.
pub fn load_qrels(path: impl AsRef<Path>) -> Result<Qrels> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut qrels = Qrels::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::malformed(
                &shown,
                lineno,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let relevance = fields[3];
        match relevance {
            "1" => qrels.insert(fields[0], fields[2]),
            "0" => {}
            other => {
                return Err(Error::malformed(
                    &shown,
                    lineno,
                    format!("relevance must be 0 or 1, found {other:?}"),
                ));
            }
        }
    }
    Ok(qrels)
}

/// Write qrels in the same 4-column layout; `load_qrels` on the output
/// recovers the exact judgment set.
pub fn save_qrels(qrels: &Qrels, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    for (query_id, docs) in qrels.iter() {
        for doc_id in docs {
            writeln!(buf, "{query_id}\t0\t{doc_id}\t1").expect("write to vec");
        }
    }
    atomic_write(path.as_ref(), &buf)
}

/// A named dataset: queries, candidate pool, judgments.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub queries: Collection,
    pub candidates: Collection,
    pub qrels: Qrels,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        queries: Collection,
        candidates: Collection,
        qrels: Qrels,
    ) -> Self {
        Dataset {
            name: name.into(),
            queries,
            candidates,
            qrels,
        }
    }
}

/// Collection counts and mean word lengths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub n_queries: usize,
    pub n_candidates: usize,
    pub avg_query_words: f64,
    pub avg_candidate_words: f64,
}

/// Arithmetic means over cached word counts. Errors on an empty
/// collection rather than emitting NaN.
pub fn compute_stats(dataset: &Dataset) -> Result<CorpusStats> {
    let mean = |collection: &Collection, kind: CollectionKind| -> Result<f64> {
        if collection.is_empty() {
            return Err(Error::EmptyCollection(kind.to_string()));
        }
        let total: u64 = collection.iter().map(|d| d.word_count as u64).sum();
        Ok(total as f64 / collection.len() as f64)
    };
    Ok(CorpusStats {
        n_queries: dataset.queries.len(),
        n_candidates: dataset.candidates.len(),
        avg_query_words: mean(&dataset.queries, CollectionKind::Queries)?,
        avg_candidate_words: mean(&dataset.candidates, CollectionKind::Candidates)?,
    })
}

/// Dataset consistency findings. Validation never fails; callers decide
/// severity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    /// Qrels query ids with no matching query document.
    pub missing_query_ids: Vec<String>,
    /// Qrels candidate ids with no matching candidate document.
    pub missing_candidate_ids: Vec<String>,
    /// Query documents with zero judged-relevant candidates.
    pub zero_relevant_queries: Vec<String>,
    /// Query ids that also appear as candidate ids.
    pub self_overlapping_ids: Vec<String>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.missing_query_ids.is_empty()
            && self.missing_candidate_ids.is_empty()
            && self.zero_relevant_queries.is_empty()
            && self.self_overlapping_ids.is_empty()
    }
}

/// Cross-check queries, candidates and qrels. Reported lists are sorted
/// and deduplicated.
pub fn validate(dataset: &Dataset) -> ValidationReport {
    let mut missing_query_ids = Vec::new();
    let mut missing_candidates = BTreeSet::new();
    for (query_id, docs) in dataset.qrels.iter() {
        if !dataset.queries.contains(query_id) {
            missing_query_ids.push(query_id.clone());
        }
        for doc_id in docs {
            if !dataset.candidates.contains(doc_id) {
                missing_candidates.insert(doc_id.clone());
            }
        }
    }

    let zero_relevant_queries = dataset
        .queries
        .ids()
        .filter(|id| dataset.qrels.relevant(id).is_none_or(|rel| rel.is_empty()))
        .map(String::from)
        .collect();

    let mut self_overlapping_ids: Vec<String> = dataset
        .queries
        .ids()
        .filter(|id| dataset.candidates.contains(id))
        .map(String::from)
        .collect();
    self_overlapping_ids.sort();

    let mut report = ValidationReport {
        missing_query_ids,
        missing_candidate_ids: missing_candidates.into_iter().collect(),
        zero_relevant_queries,
        self_overlapping_ids,
    };
    report.missing_query_ids.sort();
    report.zero_relevant_queries.sort();
    report
}
