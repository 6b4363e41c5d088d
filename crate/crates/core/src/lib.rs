//! Prior-case retrieval engine and evaluation harness.
//!
//! Ranks candidate court cases against query cases with either a
//! from-scratch BM25 inverted index or precomputed document embeddings
//! under exact cosine top-k search, and scores runs with MAP and
//! precision/recall/F at fixed cutoffs.
//!
//! Modules follow the pipeline: [`corpus`] loads and validates datasets,
//! [`tokenize`] turns text into terms, [`bm25`] and [`dense`] are the two
//! retrieval backends, [`ranker`] produces run files, [`eval`] scores
//! them.
//!
//! With the default `parallel` feature, per-query ranking and evaluation
//! run data-parallel on rayon; building without it falls back to
//! sequential code paths with byte-identical output.

pub mod bm25;
pub mod corpus;
pub mod dense;
pub mod eval;
pub mod ranker;
pub mod tokenize;

mod error;
mod io_util;

pub use error::{Error, Result};
