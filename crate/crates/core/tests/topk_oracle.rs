//! Exact top-k against a brute-force full sort with the same
//! score-then-id tie rule. The oracle computes its own dot products (f64,
//! index order) so scores are bit-identical and the comparison is exact.

use std::collections::HashSet;

use rand::prelude::*;
use rand::rngs::StdRng;

use pcr_core::dense::{top_k, EmbeddingVector, Provenance, VectorStore};

const DIM: usize = 16;

fn random_unit(rng: &mut StdRng) -> Vec<f32> {
    loop {
        let raw: Vec<f32> = (0..DIM).map(|_| rng.random_range(-1.0..1.0)).collect();
        if raw.iter().any(|v| *v != 0.0) {
            return raw;
        }
    }
}

fn random_store(rng: &mut StdRng) -> VectorStore {
    let n = rng.random_range(1..=200);
    let mut store = VectorStore::new(DIM, Provenance::new("test", "random"));
    for i in 0..n {
        store
            .insert(
                format!("v{i:03}"),
                EmbeddingVector::normalized(random_unit(rng)).unwrap(),
            )
            .unwrap();
    }
    store
}

fn oracle_full_sort(query: &EmbeddingVector, store: &VectorStore) -> Vec<(String, f64)> {
    let mut scored: Vec<(String, f64)> = store
        .iter()
        .map(|(id, vector)| {
            let mut dot = 0.0f64;
            for (a, b) in query.values().iter().zip(vector.values()) {
                dot += f64::from(*a) * f64::from(*b);
            }
            (id.to_string(), dot.clamp(-1.0, 1.0))
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored
}

#[test]
fn top_k_matches_brute_force_on_random_stores() {
    let mut rng = StdRng::seed_from_u64(0x70_9A);
    for round in 0..500 {
        let store = random_store(&mut rng);
        let query = EmbeddingVector::normalized(random_unit(&mut rng)).unwrap();
        let full = oracle_full_sort(&query, &store);

        for k in [1usize, 5, store.len()] {
            let got = top_k(&query, &store, k, &HashSet::new()).unwrap();
            let want: Vec<(String, f64)> = full.iter().take(k).cloned().collect();
            assert_eq!(got, want, "round {round}, k {k}, store {}", store.len());
        }
    }
}

#[test]
fn top_k_full_is_permutation_with_non_increasing_scores() {
    let mut rng = StdRng::seed_from_u64(0x9_E77);
    for _ in 0..50 {
        let store = random_store(&mut rng);
        let query = EmbeddingVector::normalized(random_unit(&mut rng)).unwrap();
        let got = top_k(&query, &store, store.len(), &HashSet::new()).unwrap();
        assert_eq!(got.len(), store.len());
        let mut ids: Vec<&str> = got.iter().map(|(id, _)| id.as_str()).collect();
        ids.sort_unstable();
        let mut expected: Vec<&str> = store.ids().collect();
        expected.sort_unstable();
        assert_eq!(ids, expected);
        for pair in got.windows(2) {
            assert!(pair[0].1 >= pair[1].1);
        }
        for (_, score) in &got {
            assert!((-1.0..=1.0).contains(score));
        }
    }
}

#[test]
fn exclusions_never_appear() {
    let mut rng = StdRng::seed_from_u64(3);
    let store = random_store(&mut rng);
    let query = EmbeddingVector::normalized(random_unit(&mut rng)).unwrap();
    let exclude: HashSet<String> = store.ids().take(3).map(String::from).collect();
    let got = top_k(&query, &store, store.len(), &exclude).unwrap();
    assert_eq!(got.len(), store.len().saturating_sub(exclude.len()));
    assert!(got.iter().all(|(id, _)| !exclude.contains(id)));
}
