//! Versioned binary serialization for the inverted index.
//!
//! Layout (all integers little-endian, `varint` = unsigned LEB128):
//!
//! ```text
//! magic      [u8; 4]  = "PCRB"
//! version    u32      = 1
//! n_docs     u64
//! avgdl      f64
//! term_count u64
//! terms, sorted by term bytes ascending:
//!   term_len varint, term bytes (UTF-8)
//!   df       varint
//!   postings, df entries, doc ordinals ascending:
//!     delta  varint   (first entry: ordinal; later: ordinal - previous)
//!     tf     varint
//! doc table, n_docs entries in ordinal order:
//!   id_len   varint, id bytes (UTF-8)
//!   doc_len  varint
//! ```
//!
//! Round-trips are lossless: re-serializing a loaded index reproduces the
//! input bytes.

use std::collections::HashMap;
use std::path::Path;

use super::{InvertedIndex, Posting};
use crate::error::{Error, Result};
use crate::io_util::{atomic_write, write_varint, ByteReader};

const MAGIC: &[u8; 4] = b"PCRB";
const VERSION: u32 = 1;

impl InvertedIndex {
    /// Serialize to the `PCRB` byte layout. Output is deterministic:
    /// rebuilding from the same corpus yields identical bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.n_docs() as u64).to_le_bytes());
        buf.extend_from_slice(&self.avgdl.to_le_bytes());
        buf.extend_from_slice(&(self.postings.len() as u64).to_le_bytes());

        let mut terms: Vec<&String> = self.postings.keys().collect();
        terms.sort_unstable();
        for term in terms {
            let list = &self.postings[term];
            write_varint(&mut buf, term.len() as u64);
            buf.extend_from_slice(term.as_bytes());
            write_varint(&mut buf, list.len() as u64);
            let mut prev = 0u32;
            for (i, posting) in list.iter().enumerate() {
                let delta = if i == 0 {
                    posting.doc
                } else {
                    posting.doc - prev
                };
                prev = posting.doc;
                write_varint(&mut buf, u64::from(delta));
                write_varint(&mut buf, u64::from(posting.tf));
            }
        }

        for (id, len) in self.doc_ids.iter().zip(&self.doc_len) {
            write_varint(&mut buf, id.len() as u64);
            buf.extend_from_slice(id.as_bytes());
            write_varint(&mut buf, u64::from(*len));
        }
        buf
    }

    /// Parse the `PCRB` layout; `path` is used only for error messages.
    pub fn from_bytes(bytes: &[u8], path: &str) -> Result<Self> {
        let mut r = ByteReader::new(bytes, path);
        r.expect_magic(MAGIC)?;
        r.expect_version(VERSION)?;

        let n_docs = r.read_u64()? as usize;
        let avgdl = r.read_f64()?;
        let term_count = r.read_u64()? as usize;

        let mut postings: HashMap<String, Vec<Posting>> = HashMap::with_capacity(term_count);
        for _ in 0..term_count {
            let term = r.read_string()?;
            let df = r.read_varint()? as usize;
            if df == 0 || df > n_docs {
                return Err(r.error(format!("term {term:?} has invalid df {df}")));
            }
            let mut list = Vec::with_capacity(df);
            let mut ordinal = 0u32;
            for i in 0..df {
                let delta = r.read_varint()?;
                let tf = r.read_varint()?;
                ordinal = if i == 0 {
                    u32::try_from(delta).map_err(|_| r.error("ordinal out of range"))?
                } else {
                    ordinal
                        .checked_add(u32::try_from(delta).map_err(|_| r.error("delta overflow"))?)
                        .ok_or_else(|| r.error("ordinal overflow"))?
                };
                if i > 0 && delta == 0 {
                    return Err(r.error(format!("term {term:?} postings not strictly ascending")));
                }
                if ordinal as usize >= n_docs {
                    return Err(r.error(format!("ordinal {ordinal} out of range")));
                }
                if tf == 0 {
                    return Err(r.error(format!("term {term:?} has zero tf")));
                }
                list.push(Posting {
                    doc: ordinal,
                    tf: u32::try_from(tf).map_err(|_| r.error("tf out of range"))?,
                });
            }
            if postings.insert(term.clone(), list).is_some() {
                return Err(r.error(format!("duplicate term {term:?}")));
            }
        }

        let mut doc_ids = Vec::with_capacity(n_docs);
        let mut doc_len = Vec::with_capacity(n_docs);
        let mut seen = std::collections::HashSet::with_capacity(n_docs);
        for _ in 0..n_docs {
            let id = r.read_string()?;
            if !seen.insert(id.clone()) {
                return Err(r.error(format!("duplicate doc id {id:?} in doc table")));
            }
            doc_ids.push(id);
            doc_len.push(
                u32::try_from(r.read_varint()?).map_err(|_| r.error("doc_len out of range"))?,
            );
        }
        if !r.is_at_end() {
            return Err(r.error("trailing bytes after doc table"));
        }

        let total: u64 = doc_len.iter().map(|&l| u64::from(l)).sum();
        let expected = avgdl * n_docs as f64;
        if (expected - total as f64).abs() > 1e-9 * (total as f64).max(1.0) {
            return Err(r.error(format!(
                "avgdl {avgdl} inconsistent with doc lengths (sum {total}, n {n_docs})"
            )));
        }

        Ok(InvertedIndex::from_parts(doc_ids, doc_len, postings, avgdl))
    }
}

/// Write the index to `path` atomically.
pub fn save_index(index: &InvertedIndex, path: impl AsRef<Path>) -> Result<()> {
    atomic_write(path.as_ref(), &index.to_bytes())
}

/// Read an index written by [`save_index`].
pub fn load_index(path: impl AsRef<Path>) -> Result<InvertedIndex> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    InvertedIndex::from_bytes(&bytes, &path.display().to_string())
}
