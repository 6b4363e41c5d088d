//! BM25 equivalence against a brute-force oracle.
//!
//! The oracle recomputes tf, df, avgdl and the scoring formula directly
//! from token lists, independent of the inverted index implementation.

use rand::prelude::*;
use rand::rngs::StdRng;

use pcr_core::bm25::{build_index, score, search, Bm25Params};
use pcr_core::corpus::{Collection, Document};
use pcr_core::tokenize::TokenizerConfig;

/// Direct formula evaluation over raw token lists.
fn oracle_score(
    docs: &[(String, Vec<String>)],
    query: &[String],
    target: usize,
    k1: f64,
    b: f64,
) -> f64 {
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(|(_, t)| t.len() as f64).sum::<f64>() / n;
    let dl = docs[target].1.len() as f64;
    let mut total = 0.0;
    for term in query {
        let tf = docs[target].1.iter().filter(|t| *t == term).count() as f64;
        if tf == 0.0 {
            continue;
        }
        let df = docs.iter().filter(|(_, toks)| toks.contains(term)).count() as f64;
        let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
        total += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
    }
    total
}

fn oracle_ranking(
    docs: &[(String, Vec<String>)],
    query: &[String],
    k1: f64,
    b: f64,
) -> Vec<String> {
    let mut scored: Vec<(String, f64)> = (0..docs.len())
        .map(|i| (docs[i].0.clone(), oracle_score(docs, query, i, k1, b)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.into_iter().map(|(id, _)| id).collect()
}

fn random_tokens(rng: &mut StdRng, vocab: usize, len: usize) -> Vec<String> {
    (0..len)
        .map(|_| format!("t{}", rng.random_range(0..vocab)))
        .collect()
}

fn random_corpus(rng: &mut StdRng) -> Vec<(String, Vec<String>)> {
    let n_docs = rng.random_range(1..=20);
    let vocab = rng.random_range(1..=10);
    (0..n_docs)
        .map(|i| {
            let len = rng.random_range(1..=8);
            (format!("d{i:02}"), random_tokens(rng, vocab, len))
        })
        .collect()
}

fn to_collection(docs: &[(String, Vec<String>)]) -> Collection {
    Collection::from_documents(
        docs.iter()
            .map(|(id, tokens)| Document::new(id.clone(), tokens.join(" ")).unwrap())
            .collect(),
    )
    .unwrap()
}

#[test]
fn index_scores_match_oracle_on_random_corpora() {
    let mut rng = StdRng::seed_from_u64(0xB2_25);
    let config = TokenizerConfig::new();
    for round in 0..500 {
        let docs = random_corpus(&mut rng);
        let params =
            Bm25Params::new(rng.random_range(0.0..2.5), rng.random_range(0.0..=1.0)).unwrap();
        let collection = to_collection(&docs);
        let index = build_index(&collection, &config).unwrap();
        let query_len = rng.random_range(1..=6);
        let query = random_tokens(&mut rng, 12, query_len);

        for (i, (id, _)) in docs.iter().enumerate() {
            let got = score(&query, id, &index, &params).unwrap();
            let want = oracle_score(&docs, &query, i, params.k1(), params.b());
            assert!(got.is_finite() && got >= 0.0, "round {round}: score {got}");
            let tolerance = 1e-9 * want.abs().max(1.0);
            assert!(
                (got - want).abs() <= tolerance,
                "round {round}, doc {id}: got {got}, oracle {want}"
            );
        }
    }
}

#[test]
fn search_ranking_matches_oracle_sort() {
    let mut rng = StdRng::seed_from_u64(0x0005_EA4C);
    let config = TokenizerConfig::new();
    let params = Bm25Params::default();
    for round in 0..200 {
        let docs = random_corpus(&mut rng);
        let collection = to_collection(&docs);
        let index = build_index(&collection, &config).unwrap();
        let query_len = rng.random_range(1..=6);
        let query_tokens = random_tokens(&mut rng, 12, query_len);
        let query = Document::new("q", query_tokens.join(" ")).unwrap();

        let list = search(&query, &index, &params, &config);
        let got: Vec<&str> = list.doc_ids().collect();
        let want = oracle_ranking(&docs, &query_tokens, params.k1(), params.b());
        assert_eq!(
            got,
            want.iter().map(String::as_str).collect::<Vec<_>>(),
            "round {round}"
        );

        // permutation of the candidate set
        let mut sorted = got.clone();
        sorted.sort_unstable();
        let mut expected: Vec<&str> = docs.iter().map(|(id, _)| id.as_str()).collect();
        expected.sort_unstable();
        assert_eq!(sorted, expected);
    }
}

#[test]
fn unrelated_document_keeps_scores_finite_and_ordered() {
    let mut rng = StdRng::seed_from_u64(77);
    let config = TokenizerConfig::new();
    let params = Bm25Params::default();
    for _ in 0..50 {
        let mut docs = random_corpus(&mut rng);
        let query_len = rng.random_range(1..=5);
        let query_tokens = random_tokens(&mut rng, 10, query_len);
        let query = Document::new("q", query_tokens.join(" ")).unwrap();

        // disjoint vocabulary on purpose
        docs.push(("zzz-extra".to_string(), vec!["unrelatedterm".to_string()]));
        let index = build_index(&to_collection(&docs), &config).unwrap();
        let list = search(&query, &index, &params, &config);
        assert_eq!(list.len(), docs.len());
        for item in list.items() {
            assert!(item.score.is_finite() && item.score >= 0.0);
        }
        let ranking = oracle_ranking(&docs, &query_tokens, params.k1(), params.b());
        assert_eq!(
            list.doc_ids().collect::<Vec<_>>(),
            ranking.iter().map(String::as_str).collect::<Vec<_>>()
        );
    }
}
