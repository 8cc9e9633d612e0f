//! Feature-hashing embedder: a deterministic, dependency-free stand-in for a
//! neural sentence encoder.

use super::{normalize, Embedder};
use crate::error::{Error, Result};

pub const MIN_HASH_DIM: usize = 8;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded 64-bit token hash: FNV-1a over the UTF-8 bytes, finished with a
/// splitmix64 round. Stable across platforms and releases.
pub fn token_hash(seed: u64, token: &str) -> u64 {
    let mut h = FNV_OFFSET ^ splitmix64(seed);
    for &b in token.as_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(h)
}

/// Bucket index and sign for one token.
pub fn token_bucket(seed: u64, token: &str, dim: usize) -> (usize, f32) {
    let h = token_hash(seed, token);
    let index = ((u128::from(h >> 1) * dim as u128) >> 63) as usize;
    let sign = if h & 1 == 0 { 1.0 } else { -1.0 };
    (index, sign)
}

/// Signed bucket counts of `tokens`, before normalization.
pub fn hash_counts<S: AsRef<str>>(tokens: &[S], dim: usize, seed: u64) -> Vec<f32> {
    let mut acc = vec![0f32; dim];
    for token in tokens {
        let (i, sign) = token_bucket(seed, token.as_ref(), dim);
        acc[i] += sign;
    }
    acc
}

/// Sums the signed one-hot bucket vector of every token and L2-normalizes.
///
/// Fails with `EmptyTextEmbedding` for no tokens and `ZeroVector` in the
/// rare case where colliding tokens cancel out exactly.
pub fn hash_embed<S: AsRef<str>>(tokens: &[S], dim: usize, seed: u64) -> Result<Vec<f32>> {
    if tokens.is_empty() {
        return Err(Error::EmptyTextEmbedding);
    }
    normalize(hash_counts(tokens, dim, seed))
}

#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
    seed: u64,
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim < MIN_HASH_DIM {
            return Err(Error::InvalidConfig(format!(
                "hash embedder needs dim >= {MIN_HASH_DIM}, got {dim}"
            )));
        }
        Ok(Self { dim, seed })
    }
}

impl Embedder for HashEmbedder {
    fn backend_id(&self) -> String {
        format!("hash-v1/seed={}", self.seed)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&mut self, texts: &[String]) -> Result<Vec<Vec<f32>>> {
        texts
            .iter()
            .map(|t| {
                let tokens: Vec<&str> = t.split_whitespace().collect();
                if tokens.is_empty() {
                    return Err(Error::EmptyTextEmbedding);
                }
                Ok(hash_counts(&tokens, self.dim, self.seed))
            })
            .collect()
    }
}
