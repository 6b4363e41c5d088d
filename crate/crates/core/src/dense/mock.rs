//! Deterministic test embedder: hashed bag-of-words random projection.
//!
//! Each token hashes to a bucket and a sign; token contributions are
//! summed and the result L2-normalized. The hash is FNV-1a over the token
//! bytes, seeded so vectors are stable across runs and platforms:
//!
//! ```text
//! h = (FNV64_OFFSET ^ MOCK_SEED); for each byte b: h = (h ^ b) * FNV64_PRIME
//! bucket = (h >> 1) % dim
//! sign   = +1 if h & 1 == 0 else -1
//! ```

use super::{EmbeddingProvider, EmbeddingVector};
use crate::error::{Error, Result};
use crate::tokenize::{tokenize, TokenizerConfig};

const FNV64_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV64_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Seed mixed into the FNV offset basis: the ASCII bytes of `"pcr_mock"`.
pub const MOCK_SEED: u64 = 0x7063_725f_6d6f_636b;

/// Seeded FNV-1a hash of a token.
fn token_hash(token: &str) -> u64 {
    let mut h = FNV64_OFFSET ^ MOCK_SEED;
    for byte in token.as_bytes() {
        h ^= u64::from(*byte);
        h = h.wrapping_mul(FNV64_PRIME);
    }
    h
}

fn accumulate(text: &str, dim: usize, config: &TokenizerConfig) -> Result<Vec<f32>> {
    if dim < 8 {
        return Err(Error::InvalidParam(format!(
            "mock embedder dim must be >= 8, got {dim}"
        )));
    }
    let tokens = tokenize(text, config);
    if tokens.is_empty() {
        return Err(Error::ZeroVector("text has no tokens".into()));
    }
    let mut acc = vec![0.0f32; dim];
    for token in &tokens {
        let h = token_hash(token);
        let bucket = ((h >> 1) % dim as u64) as usize;
        let sign = if h & 1 == 0 { 1.0 } else { -1.0 };
        acc[bucket] += sign;
    }
    Ok(acc)
}

/// Deterministic embedding of `text`: bag-of-words (token order does not
/// matter), L2-normalized. Errors when the text tokenizes to nothing or
/// the contributions cancel to zero.
pub fn mock_embed(text: &str, dim: usize, config: &TokenizerConfig) -> Result<EmbeddingVector> {
    EmbeddingVector::normalized(accumulate(text, dim, config)?)
}

/// [`EmbeddingProvider`] wrapper around [`mock_embed`].
#[derive(Debug, Clone)]
pub struct MockEmbedder {
    dim: usize,
    config: TokenizerConfig,
}

impl MockEmbedder {
    pub fn new(dim: usize, config: TokenizerConfig) -> Result<Self> {
        if dim < 8 {
            return Err(Error::InvalidParam(format!(
                "mock embedder dim must be >= 8, got {dim}"
            )));
        }
        Ok(MockEmbedder { dim, config })
    }
}

impl EmbeddingProvider for MockEmbedder {
    fn name(&self) -> &str {
        "mock"
    }

    fn model(&self) -> &str {
        "hashed-bow-v1"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn max_input_words(&self) -> usize {
        usize::MAX
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f32>>> {
        texts
            .iter()
            .map(|t| accumulate(t, self.dim, &self.config))
            .collect()
    }
}
