//! Content-addressed embedding cache.
//!
//! File layout: a sequence of records, each `key (32 bytes)`, `dim (u32 LE)`,
//! then `dim` little-endian `f32`s. The file is only ever appended to.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, ErrorKind, Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::check_unit;
use crate::error::{Error, Result};

/// SHA-256 over backend id, dimension and cleaned text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CacheKey(pub [u8; 32]);

impl CacheKey {
    pub fn new(backend_id: &str, dim: usize, cleaned: &str) -> Self {
        let mut h = Sha256::new();
        h.update((backend_id.len() as u64).to_le_bytes());
        h.update(backend_id.as_bytes());
        h.update((dim as u64).to_le_bytes());
        h.update(cleaned.as_bytes());
        CacheKey(h.finalize().into())
    }
}

#[derive(Debug, Default)]
pub struct EmbeddingCache {
    entries: HashMap<CacheKey, Vec<f32>>,
    path: Option<PathBuf>,
    writer: Option<BufWriter<File>>,
}

impl EmbeddingCache {
    /// An in-memory cache with no backing file.
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (or creates) a cache file, loading and validating every record.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let entries = match File::open(path) {
            Ok(mut f) => {
                let mut buf = Vec::new();
                f.read_to_end(&mut buf).map_err(|e| Error::io(path, e))?;
                decode(&buf).map_err(|reason| Error::CorruptStore {
                    path: path.to_path_buf(),
                    reason,
                })?
            }
            Err(e) if e.kind() == ErrorKind::NotFound => HashMap::new(),
            Err(e) => return Err(Error::io(path, e)),
        };
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(Self {
            entries,
            path: Some(path.to_path_buf()),
            writer: Some(BufWriter::new(file)),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, key: &CacheKey) -> bool {
        self.entries.contains_key(key)
    }

    pub fn get(&self, key: &CacheKey) -> Option<&[f32]> {
        self.entries.get(key).map(Vec::as_slice)
    }

    /// Stores a unit-norm vector. Existing keys are left untouched.
    pub fn insert(&mut self, key: CacheKey, values: Vec<f32>) -> Result<()> {
        if self.entries.contains_key(&key) {
            return Ok(());
        }
        check_unit(&values)?;
        if let Some(w) = self.writer.as_mut() {
            let path = self.path.as_deref().unwrap_or(Path::new(""));
            w.write_all(&encode(&key, &values))
                .map_err(|e| Error::io(path, e))?;
        }
        self.entries.insert(key, values);
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        if let Some(w) = self.writer.as_mut() {
            let path = self.path.as_deref().unwrap_or(Path::new(""));
            w.flush().map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }
}

impl Drop for EmbeddingCache {
    fn drop(&mut self) {
        let _ = self.flush();
    }
}

fn encode(key: &CacheKey, values: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(36 + 4 * values.len());
    out.extend_from_slice(&key.0);
    out.extend_from_slice(&(values.len() as u32).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn decode(mut buf: &[u8]) -> std::result::Result<HashMap<CacheKey, Vec<f32>>, String> {
    let mut entries = HashMap::new();
    let mut offset = 0usize;
    while !buf.is_empty() {
        if buf.len() < 36 {
            return Err(format!("truncated record header at byte {offset}"));
        }
        let key = CacheKey(buf[..32].try_into().expect("32 bytes"));
        let dim = u32::from_le_bytes(buf[32..36].try_into().expect("4 bytes")) as usize;
        let end = 36 + 4 * dim;
        if buf.len() < end {
            return Err(format!("truncated record payload at byte {offset}"));
        }
        let values: Vec<f32> = buf[36..end]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        check_unit(&values).map_err(|e| format!("record at byte {offset}: {e}"))?;
        entries.insert(key, values);
        buf = &buf[end..];
        offset += end;
    }
    Ok(entries)
}
