//! Vector store persistence.
//!
//! Binary layout (`varint` = unsigned LEB128, floats little-endian):
//!
//! ```text
//! magic    [u8; 4] = "PCRV"
//! version  u32     = 1
//! dim      u32
//! count    u64
//! provider varint len + UTF-8 bytes
//! model    varint len + UTF-8 bytes
//! records, count entries in store order:
//!   id     varint len + UTF-8 bytes
//!   vector dim x f32
//! ```
//!
//! Vector bits survive the round-trip untouched. A JSONL reader
//! (`{"id": ..., "vector": [...]}`) is provided for interop with external
//! embedding dumps; it normalizes on read when needed.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use super::{EmbeddingVector, Provenance, VectorStore, UNIT_NORM_TOLERANCE};
use crate::error::{Error, Result};
use crate::io_util::{atomic_write, write_varint, ByteReader};

const MAGIC: &[u8; 4] = b"PCRV";
const VERSION: u32 = 1;

impl VectorStore {
    /// Serialize to the `PCRV` byte layout.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        buf.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for field in [&self.provenance().provider, &self.provenance().model] {
            write_varint(&mut buf, field.len() as u64);
            buf.extend_from_slice(field.as_bytes());
        }
        for (id, vector) in self.iter() {
            write_varint(&mut buf, id.len() as u64);
            buf.extend_from_slice(id.as_bytes());
            for value in vector.values() {
                buf.extend_from_slice(&value.to_le_bytes());
            }
        }
        buf
    }

    /// Parse the `PCRV` layout; `path` is used only for error messages.
    pub fn from_bytes(bytes: &[u8], path: &str) -> Result<Self> {
        let mut r = ByteReader::new(bytes, path);
        r.expect_magic(MAGIC)?;
        r.expect_version(VERSION)?;

        let dim = r.read_u32()? as usize;
        if dim == 0 {
            return Err(r.error("dimension must be nonzero"));
        }
        let count = r.read_u64()? as usize;
        let provider = r.read_string()?;
        let model = r.read_string()?;

        let mut store = VectorStore::new(dim, Provenance::new(provider, model));
        for _ in 0..count {
            let id = r.read_string()?;
            let mut values = Vec::with_capacity(dim);
            for _ in 0..dim {
                values.push(r.read_f32()?);
            }
            let vector = EmbeddingVector::from_unit(values)
                .map_err(|e| r.error(format!("vector for {id:?}: {e}")))?;
            store
                .insert(id, vector)
                .map_err(|e| r.error(e.to_string()))?;
        }
        if !r.is_at_end() {
            return Err(r.error("trailing bytes after records"));
        }
        Ok(store)
    }
}

/// Write a store to `path` atomically. An empty store is an error: there
/// is nothing to persist.
pub fn save_store(store: &VectorStore, path: impl AsRef<Path>) -> Result<()> {
    if store.is_empty() {
        return Err(Error::EmptyCollection(
            "refusing to save empty vector store".into(),
        ));
    }
    atomic_write(path.as_ref(), &store.to_bytes())
}

/// Read a store written by [`save_store`].
pub fn load_store(path: impl AsRef<Path>) -> Result<VectorStore> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    VectorStore::from_bytes(&bytes, &path.display().to_string())
}

#[derive(Deserialize)]
struct JsonlRecord {
    id: String,
    vector: Vec<f32>,
}

/// Read embeddings from JSONL (`{"id": ..., "vector": [...]}`). The
/// dimension is taken from the first record; vectors are normalized on
/// read unless already unit-norm.
pub fn load_store_jsonl(path: impl AsRef<Path>, provenance: Provenance) -> Result<VectorStore> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut store: Option<VectorStore> = None;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: JsonlRecord = serde_json::from_str(&line)
            .map_err(|e| Error::malformed(&shown, lineno, format!("bad JSON record: {e}")))?;
        let store =
            store.get_or_insert_with(|| VectorStore::new(record.vector.len(), provenance.clone()));
        if record.vector.len() != store.dim() {
            return Err(Error::DimMismatch {
                expected: store.dim(),
                actual: record.vector.len(),
                context: format!("{shown}:{lineno} (id {:?})", record.id),
            });
        }
        let norm_gap = (super::l2_norm(&record.vector) - 1.0).abs();
        let vector = if norm_gap <= UNIT_NORM_TOLERANCE {
            EmbeddingVector::from_unit(record.vector)
        } else {
            EmbeddingVector::normalized(record.vector)
        }
        .map_err(|e| Error::malformed(&shown, lineno, e.to_string()))?;
        store.insert(record.id, vector)?;
    }
    store.ok_or_else(|| Error::EmptyCollection(format!("no records in {shown}")))
}
