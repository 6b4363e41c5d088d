//! IR metrics over runs and relevance judgments: P@k, R@k and F@k on a
//! cutoff grid, average precision and MAP, best-F extraction, and CSV
//! curve emission.
//!
//! Conventions, fixed here and relied on by the rest of the crate:
//! - P@k keeps denominator `k` even when the ranked list is shorter.
//! - R@k and AP divide by the total judged-relevant count; relevant
//!   documents missing from the list contribute nothing to the numerator.
//! - Queries with zero judged-relevant documents are skipped (counted,
//!   never averaged).
//! - F@k defaults to the harmonic mean of macro-averaged P and R; a
//!   per-query mode (mean of per-query F values) is available via
//!   [`FMode::PerQuery`].

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::corpus::Qrels;
use crate::error::{Error, Result};
use crate::io_util::atomic_write;
use crate::ranker::{RankedList, Run};

/// Default cutoff grid: 1, 5, then steps of 5 up to 50, and 100.
pub const DEFAULT_K_GRID: [usize; 12] = [1, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 100];

/// Strictly increasing positive cutoffs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct KGrid {
    ks: Vec<usize>,
}

impl Default for KGrid {
    fn default() -> Self {
        KGrid {
            ks: DEFAULT_K_GRID.to_vec(),
        }
    }
}

impl KGrid {
    pub fn new(ks: Vec<usize>) -> Result<Self> {
        if ks.is_empty() {
            return Err(Error::InvalidParam("k grid must be non-empty".into()));
        }
        if ks[0] == 0 || !ks.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParam(format!(
                "k grid must be strictly increasing positive integers, got {ks:?}"
            )));
        }
        Ok(KGrid { ks })
    }

    /// Parse a comma-separated list such as `1,5,10`.
    pub fn parse(text: &str) -> Result<Self> {
        let ks = text
            .split(',')
            .map(|part| {
                part.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidParam(format!("bad k value {part:?}")))
            })
            .collect::<Result<Vec<usize>>>()?;
        KGrid::new(ks)
    }

    pub fn ks(&self) -> &[usize] {
        &self.ks
    }
}

impl TryFrom<Vec<usize>> for KGrid {
    type Error = Error;

    fn try_from(ks: Vec<usize>) -> Result<Self> {
        KGrid::new(ks)
    }
}

impl From<KGrid> for Vec<usize> {
    fn from(grid: KGrid) -> Vec<usize> {
        grid.ks
    }
}

/// Macro-averaged metrics at one cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsAtK {
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

/// Highest F on the grid; `k` is the smallest cutoff attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestF {
    pub f: f64,
    pub k: usize,
}

/// Evaluation summary for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub map: f64,
    pub per_k: Vec<MetricsAtK>,
    pub best_f: BestF,
    /// Queries contributing to the averages.
    pub scored: usize,
    /// Queries skipped for having zero judged-relevant documents.
    pub skipped: usize,
}

impl EvalReport {
    pub fn grid(&self) -> Vec<usize> {
        self.per_k.iter().map(|m| m.k).collect()
    }
}

/// How F@k aggregates across queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FMode {
    /// Harmonic mean of the macro-averaged precision and recall.
    #[default]
    Macro,
    /// Mean of per-query F values (precision/recall stay macro averages).
    PerQuery,
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Fraction of the top `k` ranks holding relevant documents. The
/// denominator stays `k` when the list is shorter.
pub fn precision_at_k(list: &RankedList, rel: &BTreeSet<String>, k: usize) -> f64 {
    debug_assert!(k >= 1);
    let hits = list
        .items()
        .iter()
        .take(k)
        .filter(|item| rel.contains(&item.doc_id))
        .count();
    hits as f64 / k as f64
}

/// Fraction of the relevant set found in the top `k` ranks. The caller
/// must have filtered zero-relevant queries.
pub fn recall_at_k(list: &RankedList, rel: &BTreeSet<String>, k: usize) -> Result<f64> {
    if rel.is_empty() {
        return Err(Error::InvalidData(format!(
            "recall undefined for query {:?} with no relevant documents",
            list.query_id()
        )));
    }
    let hits = list
        .items()
        .iter()
        .take(k)
        .filter(|item| rel.contains(&item.doc_id))
        .count();
    Ok(hits as f64 / rel.len() as f64)
}

/// Average precision over the full ranked list: mean of P@i at each rank
/// `i` holding a relevant document, divided by the total relevant count.
/// Relevant documents absent from the list contribute zero.
pub fn average_precision(list: &RankedList, rel: &BTreeSet<String>) -> Result<f64> {
    if rel.is_empty() {
        return Err(Error::InvalidData(format!(
            "average precision undefined for query {:?} with no relevant documents",
            list.query_id()
        )));
    }
    let mut hits = 0usize;
    let mut sum = 0.0f64;
    for (i, item) in list.items().iter().enumerate() {
        if rel.contains(&item.doc_id) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(sum / rel.len() as f64)
}

/// Per-query numbers the aggregate metrics are built from.
struct QueryScores {
    ap: f64,
    per_k: Vec<(f64, f64)>, // (precision, recall) per grid cutoff
}

fn score_query(list: &RankedList, rel: &BTreeSet<String>, grid: &KGrid) -> QueryScores {
    let ap = average_precision(list, rel).expect("caller filtered zero-relevant");
    let per_k = grid
        .ks()
        .iter()
        .map(|&k| {
            let p = precision_at_k(list, rel, k);
            let r = recall_at_k(list, rel, k).expect("caller filtered zero-relevant");
            (p, r)
        })
        .collect();
    QueryScores { ap, per_k }
}

fn aggregate(scores: &[QueryScores], grid: &KGrid, mode: FMode) -> EvalReport {
    let n = scores.len() as f64;
    let map = scores.iter().map(|s| s.ap).sum::<f64>() / n;
    let per_k = grid
        .ks()
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let precision = scores.iter().map(|s| s.per_k[i].0).sum::<f64>() / n;
            let recall = scores.iter().map(|s| s.per_k[i].1).sum::<f64>() / n;
            let f = match mode {
                FMode::Macro => harmonic(precision, recall),
                FMode::PerQuery => {
                    scores
                        .iter()
                        .map(|s| harmonic(s.per_k[i].0, s.per_k[i].1))
                        .sum::<f64>()
                        / n
                }
            };
            MetricsAtK {
                k,
                precision,
                recall,
                f,
            }
        })
        .collect::<Vec<_>>();

    let best = per_k
        .iter()
        .max_by(|a, b| a.f.total_cmp(&b.f))
        .expect("grid is non-empty");
    // smallest k among maxima
    let best_f = per_k
        .iter()
        .find(|m| m.f == best.f)
        .map(|m| BestF { f: m.f, k: m.k })
        .expect("found above");

    EvalReport {
        map,
        per_k,
        best_f,
        scored: scores.len(),
        skipped: 0,
    }
}

/// Macro-averaged P, R and F across all scorable queries at one cutoff.
pub fn f_at_k(run: &Run, qrels: &Qrels, k: usize) -> Result<MetricsAtK> {
    let grid = KGrid::new(vec![k])?;
    let report = evaluate_run(run, qrels, &grid)?;
    Ok(report.per_k.into_iter().next().expect("one cutoff"))
}

/// Evaluate a run against judgments over a cutoff grid with the default
/// macro F aggregation.
pub fn evaluate_run(run: &Run, qrels: &Qrels, grid: &KGrid) -> Result<EvalReport> {
    evaluate_run_with(run, qrels, grid, FMode::Macro)
}

/// [`evaluate_run`] with an explicit F aggregation mode. Per-query metric
/// computation runs in parallel when the `parallel` feature is enabled;
/// aggregation order is fixed by query id, so results are deterministic.
pub fn evaluate_run_with(
    run: &Run,
    qrels: &Qrels,
    grid: &KGrid,
    mode: FMode,
) -> Result<EvalReport> {
    let (scorable, skipped) = partition_scorable(run, qrels)?;
    #[cfg(feature = "parallel")]
    let scores: Vec<QueryScores> = scorable
        .par_iter()
        .map(|(list, rel)| score_query(list, rel, grid))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let scores: Vec<QueryScores> = scorable
        .iter()
        .map(|(list, rel)| score_query(list, rel, grid))
        .collect();

    let mut report = aggregate(&scores, grid, mode);
    report.skipped = skipped;
    Ok(report)
}

/// Single-threaded equivalent of [`evaluate_run_with`]; same output.
pub fn evaluate_run_sequential(
    run: &Run,
    qrels: &Qrels,
    grid: &KGrid,
    mode: FMode,
) -> Result<EvalReport> {
    let (scorable, skipped) = partition_scorable(run, qrels)?;
    let scores: Vec<QueryScores> = scorable
        .iter()
        .map(|(list, rel)| score_query(list, rel, grid))
        .collect();
    let mut report = aggregate(&scores, grid, mode);
    report.skipped = skipped;
    Ok(report)
}

type Scorable<'a> = Vec<(&'a RankedList, &'a BTreeSet<String>)>;

fn partition_scorable<'a>(run: &'a Run, qrels: &'a Qrels) -> Result<(Scorable<'a>, usize)> {
    let mut scorable = Vec::new();
    let mut skipped = 0usize;
    for (query_id, list) in run {
        match qrels.relevant(query_id).filter(|rel| !rel.is_empty()) {
            Some(rel) => scorable.push((list, rel)),
            None => skipped += 1,
        }
    }
    if scorable.is_empty() {
        return Err(Error::InvalidData(
            "no scorable queries: run and qrels share no query with relevant documents".into(),
        ));
    }
    Ok((scorable, skipped))
}

/// Render named reports as a `model,k,precision,recall,f` CSV, one row
/// per (model, cutoff). All reports must share one grid.
pub fn curves_csv(reports: &[(String, EvalReport)]) -> Result<String> {
    let Some((_, first)) = reports.first() else {
        return Err(Error::InvalidData("no reports to emit".into()));
    };
    let grid = first.grid();
    for (name, report) in reports {
        if report.grid() != grid {
            return Err(Error::InvalidData(format!(
                "k grid mismatch: {:?} has {:?}, {:?} has {:?}",
                reports[0].0,
                grid,
                name,
                report.grid()
            )));
        }
    }
    let mut csv = String::from("model,k,precision,recall,f\n");
    for (name, report) in reports {
        for m in &report.per_k {
            csv.push_str(&format!(
                "{name},{},{:.6},{:.6},{:.6}\n",
                m.k, m.precision, m.recall, m.f
            ));
        }
    }
    Ok(csv)
}

/// Write the [`curves_csv`] output to `path` atomically.
pub fn emit_curves(reports: &[(String, EvalReport)], path: impl AsRef<Path>) -> Result<()> {
    atomic_write(path.as_ref(), curves_csv(reports)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(query_id: &str, ids: &[&str]) -> RankedList {
        let scored = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.to_string(), 1.0 - i as f64 * 0.1))
            .collect();
        RankedList::from_scored(query_id, scored).unwrap()
    }

    fn rel(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn grid_validation() {
        assert!(KGrid::new(vec![]).is_err());
        assert!(KGrid::new(vec![0, 1]).is_err());
        assert!(KGrid::new(vec![1, 1]).is_err());
        assert!(KGrid::new(vec![5, 1]).is_err());
        assert_eq!(KGrid::default().ks(), &DEFAULT_K_GRID);
        assert_eq!(KGrid::parse("1, 5").unwrap().ks(), &[1, 5]);
        assert!(KGrid::parse("1,x").is_err());
    }

    #[test]
    fn precision_examples() {
        let l = list("q", &["d1", "d2", "d3"]);
        let r = rel(&["d1", "d3"]);
        assert_eq!(precision_at_k(&l, &r, 1), 1.0);
        assert!((precision_at_k(&l, &r, 3) - 2.0 / 3.0).abs() < 1e-12);
        // short list: denominator stays k
        assert_eq!(precision_at_k(&l, &r, 5), 0.4);
    }

    #[test]
    fn recall_examples() {
        let l = list("q", &["d1"]);
        let r = rel(&["d1", "d3"]);
        assert_eq!(recall_at_k(&l, &r, 1).unwrap(), 0.5);
        let l = list("q", &["d1", "d3"]);
        assert_eq!(recall_at_k(&l, &r, 2).unwrap(), 1.0);
        let l = list("q", &["d7", "d8"]);
        assert_eq!(recall_at_k(&l, &r, 2).unwrap(), 0.0);
        assert!(recall_at_k(&l, &rel(&[]), 1).is_err());
    }

    #[test]
    fn ap_hand_cases() {
        // [R, N, R] with |rel| = 2: (1/1 + 2/3) / 2
        let l = list("q", &["r1", "n1", "r2"]);
        let ap = average_precision(&l, &rel(&["r1", "r2"])).unwrap();
        assert!((ap - 0.833333).abs() < 1e-6, "{ap}");

        // perfect ranking: exactly 1.0
        let l = list("q", &["r1", "r2", "n1"]);
        assert_eq!(average_precision(&l, &rel(&["r1", "r2"])).unwrap(), 1.0);

        // relevant doc absent from the pool still counts in the denominator
        let l = list("q", &["r1", "n1"]);
        let ap = average_precision(&l, &rel(&["r1", "ghost"])).unwrap();
        assert_eq!(ap, 0.5);

        assert!(average_precision(&l, &rel(&[])).is_err());
    }

    fn run_of(lists: Vec<RankedList>) -> Run {
        lists
            .into_iter()
            .map(|l| (l.query_id().to_string(), l))
            .collect()
    }

    #[test]
    fn f_at_k_macro_hand_cases() {
        // two queries engineered to macro P = 0.25, R = 0.5 at k = 2:
        // each query: P@2 = 0.25? not reachable per query; use asymmetric pair.
        // q1: top-2 has 1 relevant of |rel|=2 -> P=0.5, R=0.5
        // q2: top-2 has 0 relevant of |rel|=1 -> P=0.0, R=0.0
        // macro P = 0.25, macro R = 0.25 -> F = 0.25
        let mut qrels = Qrels::new();
        qrels.insert("q1", "a");
        qrels.insert("q1", "b");
        qrels.insert("q2", "c");
        let run = run_of(vec![
            list("q1", &["a", "x", "b"]),
            list("q2", &["x", "y", "c"]),
        ]);
        let m = f_at_k(&run, &qrels, 2).unwrap();
        assert!((m.precision - 0.25).abs() < 1e-12);
        assert!((m.recall - 0.25).abs() < 1e-12);
        assert!((m.f - 0.25).abs() < 1e-12);
    }

    #[test]
    fn harmonic_mean_rules() {
        assert_eq!(harmonic(0.5, 0.5), 0.5);
        assert!((harmonic(0.25, 0.5) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(harmonic(0.0, 0.0), 0.0);
    }

    #[test]
    fn evaluate_run_means_and_skips() {
        let mut qrels = Qrels::new();
        qrels.insert("q1", "a");
        qrels.insert("q2", "b");
        // q1 perfect (AP 1.0), q2 relevant at rank 2 (AP 0.5), q3 unjudged
        let run = run_of(vec![
            list("q1", &["a", "x"]),
            list("q2", &["x", "b"]),
            list("q3", &["x", "y"]),
        ]);
        let grid = KGrid::new(vec![1, 2]).unwrap();
        let report = evaluate_run(&run, &qrels, &grid).unwrap();
        assert!((report.map - 0.75).abs() < 1e-12);
        assert_eq!(report.scored, 2);
        assert_eq!(report.skipped, 1);
        assert_eq!(report.per_k.len(), 2);
    }

    #[test]
    fn evaluate_run_errors_without_scorable_queries() {
        let qrels = Qrels::new();
        let run = run_of(vec![list("q1", &["a"])]);
        assert!(evaluate_run(&run, &qrels, &KGrid::default()).is_err());
    }

    #[test]
    fn best_f_takes_smallest_k_among_ties() {
        // engineer a report directly
        let per_k = [
            MetricsAtK {
                k: 5,
                precision: 0.3,
                recall: 0.32,
                f: 0.31,
            },
            MetricsAtK {
                k: 10,
                precision: 0.3,
                recall: 0.26,
                f: 0.28,
            },
            MetricsAtK {
                k: 15,
                precision: 0.3,
                recall: 0.32,
                f: 0.31,
            },
        ];
        let best = per_k.iter().max_by(|a, b| a.f.total_cmp(&b.f)).unwrap();
        let found = per_k.iter().find(|m| m.f == best.f).unwrap();
        assert_eq!(found.k, 5);

        // and through the aggregation path: a single query where F@1 == F@3
        let mut qrels = Qrels::new();
        qrels.insert("q1", "a");
        let run = run_of(vec![list("q1", &["a", "x", "y"])]);
        let grid = KGrid::new(vec![1, 2]).unwrap();
        let report = evaluate_run(&run, &qrels, &grid).unwrap();
        // k=1: P=1, R=1, F=1; k=2: P=0.5, R=1, F=2/3
        assert_eq!(report.best_f, BestF { f: 1.0, k: 1 });
    }

    #[test]
    fn per_query_f_mode_differs_from_macro() {
        let mut qrels = Qrels::new();
        qrels.insert("q1", "a");
        qrels.insert("q2", "b");
        let run = run_of(vec![
            list("q1", &["a", "x"]), // P@1 = 1, R@1 = 1, F = 1
            list("q2", &["x", "b"]), // P@1 = 0, R@1 = 0, F = 0
        ]);
        let grid = KGrid::new(vec![1]).unwrap();
        let macro_report = evaluate_run_with(&run, &qrels, &grid, FMode::Macro).unwrap();
        let per_query = evaluate_run_with(&run, &qrels, &grid, FMode::PerQuery).unwrap();
        // macro: P = R = 0.5 -> F = 0.5; per-query: (1 + 0) / 2 = 0.5 here,
        // so use recall asymmetry to separate them
        assert_eq!(macro_report.per_k[0].f, 0.5);
        assert_eq!(per_query.per_k[0].f, 0.5);

        let mut qrels = Qrels::new();
        qrels.insert("q1", "a");
        qrels.insert("q2", "b");
        qrels.insert("q2", "c");
        let run = run_of(vec![
            list("q1", &["a", "x"]), // P@2 = 0.5, R@2 = 1
            list("q2", &["b", "c"]), // P@2 = 1, R@2 = 1
        ]);
        let grid = KGrid::new(vec![2]).unwrap();
        let macro_report = evaluate_run_with(&run, &qrels, &grid, FMode::Macro).unwrap();
        let per_query = evaluate_run_with(&run, &qrels, &grid, FMode::PerQuery).unwrap();
        // macro: P = 0.75, R = 1 -> F = 6/7; per-query: (2/3 + 1) / 2 = 5/6
        assert!((macro_report.per_k[0].f - 6.0 / 7.0).abs() < 1e-12);
        assert!((per_query.per_k[0].f - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let mut qrels = Qrels::new();
        qrels.insert("q1", "a");
        qrels.insert("q2", "b");
        let run = run_of(vec![
            list("q1", &["x", "a", "y"]),
            list("q2", &["b", "x", "y"]),
        ]);
        let grid = KGrid::new(vec![1, 2, 3]).unwrap();
        let a = evaluate_run(&run, &qrels, &grid).unwrap();
        let b = evaluate_run_sequential(&run, &qrels, &grid, FMode::Macro).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn curves_shape_and_round_trip() {
        let mut qrels = Qrels::new();
        qrels.insert("q1", "a");
        let run = run_of(vec![list("q1", &["a", "x"])]);
        let report = evaluate_run(&run, &qrels, &KGrid::default()).unwrap();
        let reports = vec![
            ("bm25".to_string(), report.clone()),
            ("dense".to_string(), report.clone()),
        ];
        let csv = curves_csv(&reports).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 2 * DEFAULT_K_GRID.len());
        assert_eq!(lines[0], "model,k,precision,recall,f");

        // parse back and compare f to printed precision
        for (line, m) in lines[1..]
            .iter()
            .zip(report.per_k.iter().chain(&report.per_k))
        {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 5);
            assert_eq!(fields[1].parse::<usize>().unwrap(), m.k);
            let f: f64 = fields[4].parse().unwrap();
            assert!((f - m.f).abs() < 1e-6);
        }

        let single = curves_csv(&reports[..1]).unwrap();
        assert_eq!(single.lines().count(), 1 + DEFAULT_K_GRID.len());
    }

    #[test]
    fn curves_reject_grid_mismatch() {
        let mut qrels = Qrels::new();
        qrels.insert("q1", "a");
        let run = run_of(vec![list("q1", &["a", "x"])]);
        let r1 = evaluate_run(&run, &qrels, &KGrid::new(vec![1, 2]).unwrap()).unwrap();
        let r2 = evaluate_run(&run, &qrels, &KGrid::new(vec![1, 3]).unwrap()).unwrap();
        let err = curves_csv(&[("a".into(), r1), ("b".into(), r2)]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[1, 2]") && msg.contains("[1, 3]"), "{msg}");
    }

    #[test]
    fn report_json_keys() {
        let mut qrels = Qrels::new();
        qrels.insert("q1", "a");
        let run = run_of(vec![list("q1", &["a"])]);
        let report = evaluate_run(&run, &qrels, &KGrid::new(vec![1]).unwrap()).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        assert!(json.get("map").is_some());
        assert!(json.get("per_k").is_some());
        assert!(json.get("best_f").is_some());
        assert!(json.get("skipped").is_some());
        let back: EvalReport = serde_json::from_value(json).unwrap();
        assert_eq!(back, report);
    }
}
