//! Embedding backends, vector math and the content-addressed cache.

mod cache;
mod hash;
pub mod sidecar;

use std::collections::HashMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::textprep::clean_for_embedding;

pub use cache::{CacheKey, EmbeddingCache};
pub use hash::{hash_counts, hash_embed, token_bucket, token_hash, HashEmbedder, MIN_HASH_DIM};
pub use sidecar::SidecarEmbedder;

/// Largest batch sent to a backend in one request.
pub const MAX_BATCH: usize = 64;

/// Allowed deviation of a stored vector's L2 norm from 1.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-5;

pub type ContentHash = [u8; 32];

pub fn content_hash(cleaned: &str) -> ContentHash {
    Sha256::digest(cleaned.as_bytes()).into()
}

/// An L2-normalized embedding of one cleaned text.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f32>,
    source_hash: ContentHash,
}

impl EmbeddingVector {
    /// Normalizes `values`; rejects empty, zero and non-finite input.
    pub fn new(values: Vec<f32>, source_hash: ContentHash) -> Result<Self> {
        Ok(Self {
            values: normalize(values)?,
            source_hash,
        })
    }

    /// Wraps values that must already be unit-norm (e.g. read back from disk).
    pub fn from_normalized(values: Vec<f32>, source_hash: ContentHash) -> Result<Self> {
        check_unit(&values)?;
        Ok(Self {
            values,
            source_hash,
        })
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn source_hash(&self) -> &ContentHash {
        &self.source_hash
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }
}

pub fn l2_norm(values: &[f32]) -> f64 {
    values
        .iter()
        .map(|&v| f64::from(v) * f64::from(v))
        .sum::<f64>()
        .sqrt()
}

pub fn normalize(mut values: Vec<f32>) -> Result<Vec<f32>> {
    if values.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: 0,
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let norm = l2_norm(&values);
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    for v in &mut values {
        *v = (f64::from(*v) / norm) as f32;
    }
    Ok(values)
}

pub(crate) fn check_unit(values: &[f32]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let norm = l2_norm(values);
    if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
        return Err(Error::InvalidConfig(format!(
            "vector norm {norm} is not within {UNIT_NORM_TOLERANCE} of 1"
        )));
    }
    Ok(())
}

/// Dot product accumulated in 64-bit.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut lanes = [0f64; 4];
    let chunks = a.len() / 4 * 4;
    for (x, y) in a[..chunks].chunks_exact(4).zip(b[..chunks].chunks_exact(4)) {
        for l in 0..4 {
            lanes[l] += f64::from(x[l]) * f64::from(y[l]);
        }
    }
    let mut tail = 0f64;
    for (x, y) in a[chunks..].iter().zip(&b[chunks..]) {
        tail += f64::from(*x) * f64::from(*y);
    }
    (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]) + tail
}

/// Cosine similarity of two raw slices, clamped to [-1, 1].
pub fn cosine_slices(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let (na, nb) = (l2_norm(a), l2_norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    cosine_slices(&a.values, &b.values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Hash,
    Sidecar,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hash" => Ok(Backend::Hash),
            "sidecar" => Ok(Backend::Sidecar),
            other => Err(Error::InvalidConfig(format!("unknown embedder `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedderConfig {
    pub backend: Backend,
    /// Vector size produced by the hash backend, or expected from the sidecar.
    pub dim: usize,
    pub endpoint: Option<String>,
    pub cache_path: Option<PathBuf>,
    /// Hash-function seed for the hash backend.
    pub seed: u64,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Hash,
            dim: 256,
            endpoint: None,
            cache_path: None,
            seed: 42,
        }
    }
}

impl EmbedderConfig {
    pub fn hash(dim: usize, seed: u64) -> Self {
        Self {
            dim,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.backend {
            Backend::Hash if self.dim < MIN_HASH_DIM => Err(Error::InvalidConfig(format!(
                "hash embedder needs dim >= {MIN_HASH_DIM}, got {}",
                self.dim
            ))),
            Backend::Sidecar if self.endpoint.as_deref().is_none_or(|e| e.trim().is_empty()) => {
                Err(Error::InvalidConfig(
                    "sidecar embedder needs an endpoint".into(),
                ))
            }
            _ if self.dim == 0 => Err(Error::InvalidConfig("dim must be positive".into())),
            _ => Ok(()),
        }
    }

    pub fn build_embedder(&self) -> Result<Box<dyn Embedder + Send>> {
        self.validate()?;
        Ok(match self.backend {
            Backend::Hash => Box::new(HashEmbedder::new(self.dim, self.seed)?),
            Backend::Sidecar => Box::new(SidecarEmbedder::new(
                self.endpoint.as_deref().unwrap_or_default(),
                self.dim,
            )),
        })
    }
}

/// A text-embedding backend. Inputs are cleaned, non-empty texts; outputs
/// need not be normalized.
pub trait Embedder {
    /// Stable identifier that distinguishes backends in cache keys.
    fn backend_id(&self) -> String;

    fn dim(&self) -> usize;

    fn embed_batch(&mut self, texts: &[String]) -> Result<Vec<Vec<f32>>>;

    /// Embeds several batches; transports may overlap the requests.
    fn embed_batches(&mut self, batches: &[Vec<String>]) -> Result<Vec<Vec<Vec<f32>>>> {
        batches.iter().map(|b| self.embed_batch(b)).collect()
    }
}

/// Handling of texts that cannot be embedded (nothing left after cleaning,
/// or a backend vector with no direction).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmptyPolicy {
    /// Fail, naming the offending index.
    Strict,
    /// Yield `None` for that position.
    Skip,
}

/// Cleans, caches and batches texts on their way to a backend.
pub struct EmbeddingService {
    embedder: Box<dyn Embedder + Send>,
    cache: Option<EmbeddingCache>,
    backend_calls: usize,
}

impl EmbeddingService {
    pub fn new(embedder: Box<dyn Embedder + Send>, cache: Option<EmbeddingCache>) -> Self {
        Self {
            embedder,
            cache,
            backend_calls: 0,
        }
    }

    pub fn from_config(cfg: &EmbedderConfig) -> Result<Self> {
        let embedder = cfg.build_embedder()?;
        let cache = match &cfg.cache_path {
            Some(path) => Some(EmbeddingCache::open(path)?),
            None => None,
        };
        Ok(Self::new(embedder, cache))
    }

    pub fn dim(&self) -> usize {
        self.embedder.dim()
    }

    pub fn backend_id(&self) -> String {
        self.embedder.backend_id()
    }

    /// Number of backend batch calls made so far.
    pub fn backend_calls(&self) -> usize {
        self.backend_calls
    }

    pub fn cache(&self) -> Option<&EmbeddingCache> {
        self.cache.as_ref()
    }

    pub fn embed(&mut self, text: &str) -> Result<EmbeddingVector> {
        match self.embed_corpus(&[text], EmptyPolicy::Strict) {
            Ok(mut out) => out.pop().flatten().ok_or(Error::EmptyTextEmbedding),
            Err(Error::AtIndex { source, .. }) => Err(*source),
            Err(e) => Err(e),
        }
    }

    /// Embeds `texts` in order. Errors carry the index of the failing text.
    pub fn embed_corpus<S: AsRef<str>>(
        &mut self,
        texts: &[S],
        policy: EmptyPolicy,
    ) -> Result<Vec<Option<EmbeddingVector>>> {
        let backend_id = self.embedder.backend_id();
        let dim = self.embedder.dim();

        struct Item {
            key: CacheKey,
            source_hash: ContentHash,
        }
        let mut items: Vec<Option<Item>> = Vec::with_capacity(texts.len());
        // Distinct uncached texts in first-seen order, with that index.
        let mut pending: Vec<(CacheKey, String, usize)> = Vec::new();
        let mut pending_keys: HashMap<CacheKey, usize> = HashMap::new();

        for (i, text) in texts.iter().enumerate() {
            let cleaned = clean_for_embedding(text.as_ref());
            if cleaned.is_empty() {
                match policy {
                    EmptyPolicy::Strict => {
                        return Err(Error::at_index(i, Error::EmptyTextEmbedding))
                    }
                    EmptyPolicy::Skip => {
                        items.push(None);
                        continue;
                    }
                }
            }
            let key = CacheKey::new(&backend_id, dim, &cleaned.cleaned);
            let cached = self.cache.as_ref().is_some_and(|c| c.contains(&key));
            if !cached && !pending_keys.contains_key(&key) {
                pending_keys.insert(key, i);
                pending.push((key, cleaned.cleaned.clone(), i));
            }
            items.push(Some(Item {
                key,
                source_hash: content_hash(&cleaned.cleaned),
            }));
        }

        let mut fresh: HashMap<CacheKey, Vec<f32>> = HashMap::new();
        let batches: Vec<Vec<String>> = pending
            .chunks(MAX_BATCH)
            .map(|c| c.iter().map(|(_, t, _)| t.clone()).collect())
            .collect();
        if !batches.is_empty() {
            self.backend_calls += batches.len();
            let results = self.embedder.embed_batches(&batches)?;
            let mut pending_iter = pending.iter();
            for (batch, vectors) in batches.iter().zip(results) {
                if vectors.len() != batch.len() {
                    return Err(Error::DimensionMismatch {
                        expected: batch.len(),
                        got: vectors.len(),
                    });
                }
                for raw in vectors {
                    let (key, _, index) = pending_iter.next().expect("one vector per text");
                    if raw.len() != dim {
                        return Err(Error::at_index(
                            *index,
                            Error::DimensionMismatch {
                                expected: dim,
                                got: raw.len(),
                            },
                        ));
                    }
                    match normalize(raw) {
                        Ok(unit) => {
                            fresh.insert(*key, unit);
                        }
                        Err(e) if policy == EmptyPolicy::Strict => {
                            return Err(Error::at_index(*index, e))
                        }
                        Err(_) => {}
                    }
                }
            }
            if let Some(cache) = self.cache.as_mut() {
                for (key, _, _) in &pending {
                    if let Some(v) = fresh.get(key) {
                        cache.insert(*key, v.clone())?;
                    }
                }
                cache.flush()?;
            }
        }

        let mut out = Vec::with_capacity(items.len());
        for item in items {
            out.push(match item {
                None => None,
                Some(Item { key, source_hash }) => fresh
                    .get(&key)
                    .cloned()
                    .or_else(|| {
                        self.cache
                            .as_ref()
                            .and_then(|c| c.get(&key))
                            .map(<[f32]>::to_vec)
                    })
                    .map(|values| EmbeddingVector {
                        values,
                        source_hash,
                    }),
            });
        }
        Ok(out)
    }

    /// Strict variant of [`embed_corpus`](Self::embed_corpus).
    pub fn embed_all<S: AsRef<str>>(&mut self, texts: &[S]) -> Result<Vec<EmbeddingVector>> {
        Ok(self
            .embed_corpus(texts, EmptyPolicy::Strict)?
            .into_iter()
            .map(|v| v.expect("strict mode yields every vector"))
            .collect())
    }
}

/// One-shot embedding of a single text.
pub fn embed(text: &str, cfg: &EmbedderConfig) -> Result<EmbeddingVector> {
    EmbeddingService::from_config(cfg)?.embed(text)
}
