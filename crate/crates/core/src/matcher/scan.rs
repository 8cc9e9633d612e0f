//! Exact brute-force similarity scan.
//!
//! Every row of a [`VectorIndex`] is scored against the query. Rows are
//! split into fixed-size chunks; each chunk keeps its own best `top_n`
//! (plus anything tied with the last of them), and the per-chunk winners are
//! merged under the same order, so the result does not depend on the thread
//! count.
//!
//! Vectors are stored in single precision, so two rows whose exact cosines
//! are equal can score a few 1e-8 apart. Scores within [`TIE_EPSILON`] of
//! the best score of their run are treated as tied and ordered newer first,
//! then by id.

use std::cmp::Ordering;

use rayon::prelude::*;

use super::index::VectorIndex;
use crate::embedding::dot;

const CHUNK_ROWS: usize = 2048;

/// Scores this close count as equal. Rounding unit vectors to f32 moves a
/// dot product by at most about 1.2e-7.
pub const TIE_EPSILON: f64 = 5e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub row: usize,
    pub similarity: f64,
}

/// Similarity descending, then newer first, then id ascending, with no
/// tolerance. Used to collect candidates; [`settle_ties`] fixes the final order.
pub fn hit_order(index: &VectorIndex, a: &Hit, b: &Hit) -> Ordering {
    b.similarity
        .total_cmp(&a.similarity)
        .then_with(|| index.created_at(b.row).cmp(&index.created_at(a.row)))
        .then_with(|| index.id(a.row).cmp(index.id(b.row)))
}

#[derive(Clone, Copy)]
pub struct ScanSpec<'f> {
    pub top_n: usize,
    pub min_similarity: Option<f64>,
    pub keep: Option<&'f (dyn Fn(usize) -> bool + Sync)>,
}

fn tie_order(index: &VectorIndex, a: &Hit, b: &Hit) -> Ordering {
    index
        .created_at(b.row)
        .cmp(&index.created_at(a.row))
        .then_with(|| index.id(a.row).cmp(index.id(b.row)))
}

/// Lowest score that can still end up in the best `top_n` of `best`.
fn floor(best: &[Hit], top_n: usize) -> Option<f64> {
    best.get(top_n - 1).map(|h| h.similarity - TIE_EPSILON)
}

/// Drops candidates that can no longer reach the best `top_n`.
fn prune(best: &mut Vec<Hit>, top_n: usize) {
    if let Some(f) = floor(best, top_n) {
        while best.len() > top_n && best.last().is_some_and(|h| h.similarity < f) {
            best.pop();
        }
    }
}

/// Sorted insertion into a best-first candidate list.
fn offer(index: &VectorIndex, best: &mut Vec<Hit>, hit: Hit, top_n: usize) {
    if floor(best, top_n).is_some_and(|f| hit.similarity < f) {
        return;
    }
    let pos = best
        .binary_search_by(|probe| hit_order(index, probe, &hit))
        .unwrap_or_else(|p| p);
    best.insert(pos, hit);
    prune(best, top_n);
}

/// Reorders runs of tied scores in a list sorted by [`hit_order`]. A run
/// starts at its highest score and takes every following hit within
/// [`TIE_EPSILON`] of it.
pub fn settle_ties(index: &VectorIndex, hits: &mut [Hit]) {
    let mut start = 0;
    while start < hits.len() {
        let head = hits[start].similarity;
        let len = hits[start..]
            .iter()
            .take_while(|h| head - h.similarity <= TIE_EPSILON)
            .count();
        hits[start..start + len].sort_by(|a, b| tie_order(index, a, b));
        start += len;
    }
}

fn scan_rows(
    index: &VectorIndex,
    query: &[f32],
    rows: std::ops::Range<usize>,
    spec: &ScanSpec<'_>,
) -> Vec<Hit> {
    let dim = index.dim();
    let mut best = Vec::with_capacity(spec.top_n.min(rows.len()) + 8);
    let data = &index.data()[rows.start * dim..rows.end * dim];
    for (offset, row_values) in data.chunks_exact(dim).enumerate() {
        let row = rows.start + offset;
        if let Some(keep) = spec.keep {
            if !keep(row) {
                continue;
            }
        }
        let similarity = dot(query, row_values);
        if spec.min_similarity.is_some_and(|t| similarity < t) {
            continue;
        }
        offer(index, &mut best, Hit { row, similarity }, spec.top_n);
    }
    best
}

/// Best `spec.top_n` rows for a unit-norm query, best first.
///
/// With `pool` set, chunks are scored on that pool; otherwise serially.
pub fn scan(
    index: &VectorIndex,
    query: &[f32],
    spec: &ScanSpec<'_>,
    pool: Option<&rayon::ThreadPool>,
) -> Vec<Hit> {
    assert_eq!(query.len(), index.dim(), "query dimension");
    if spec.top_n == 0 || index.is_empty() {
        return Vec::new();
    }
    let n = index.len();
    let mut merged = match pool {
        None => scan_rows(index, query, 0..n, spec),
        Some(pool) => {
            let chunks: Vec<Vec<Hit>> = pool.install(|| {
                (0..n.div_ceil(CHUNK_ROWS))
                    .into_par_iter()
                    .map(|c| {
                        let start = c * CHUNK_ROWS;
                        scan_rows(index, query, start..(start + CHUNK_ROWS).min(n), spec)
                    })
                    .collect()
            });
            let mut merged: Vec<Hit> = chunks.into_iter().flatten().collect();
            merged.sort_by(|a, b| hit_order(index, a, b));
            prune(&mut merged, spec.top_n);
            merged
        }
    };
    settle_ties(index, &mut merged);
    merged.truncate(spec.top_n);
    merged
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::normalize;
    use chrono::{TimeZone, Utc};
    use rand::{Rng, SeedableRng};

    fn random_index(n: usize, dim: usize, seed: u64) -> VectorIndex {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut index = VectorIndex::new(dim);
        for i in 0..n {
            // Coarse values make exact ties common.
            let v: Vec<f32> = (0..dim).map(|_| rng.gen_range(-2i32..=2) as f32).collect();
            let v = normalize(v).unwrap_or_else(|_| {
                let mut e = vec![0.0; dim];
                e[0] = 1.0;
                e
            });
            let t = Utc.timestamp_opt(rng.gen_range(0..5), 0).unwrap();
            index.push(&format!("r{i:05}"), t, &v).unwrap();
        }
        index
    }

    fn spec(top_n: usize) -> ScanSpec<'static> {
        ScanSpec {
            top_n,
            min_similarity: None,
            keep: None,
        }
    }

    #[test]
    fn serial_and_parallel_agree() {
        let index = random_index(9000, 4, 1);
        let query = normalize(vec![1.0, 1.0, 0.0, -1.0]).unwrap();
        let serial = scan(&index, &query, &spec(50), None);
        for threads in [1, 3, 8] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            assert_eq!(scan(&index, &query, &spec(50), Some(&pool)), serial);
        }
        assert_eq!(serial.len(), 50);
        for w in serial.windows(2) {
            assert!(w[0].similarity + TIE_EPSILON >= w[1].similarity);
            if (w[0].similarity - w[1].similarity).abs() <= TIE_EPSILON {
                assert_eq!(tie_order(&index, &w[0], &w[1]), Ordering::Less);
            }
        }
    }

    #[test]
    fn full_sort_matches_bounded_scan() {
        let index = random_index(500, 3, 2);
        let query = normalize(vec![0.0, 1.0, 1.0]).unwrap();
        let mut all: Vec<Hit> = (0..index.len())
            .map(|row| Hit {
                row,
                similarity: dot(&query, index.row(row)),
            })
            .collect();
        all.sort_by(|a, b| hit_order(&index, a, b));
        settle_ties(&index, &mut all);
        assert_eq!(scan(&index, &query, &spec(500), None), all);
        for n in [1, 7, 60] {
            assert_eq!(scan(&index, &query, &spec(n), None), all[..n].to_vec());
        }
    }

    #[test]
    fn near_equal_scores_follow_the_tie_break() {
        let mut index = VectorIndex::new(2);
        let t = |s| Utc.timestamp_opt(s, 0).unwrap();
        index.push("old", t(1), &[1.0, 0.0]).unwrap();
        index.push("new", t(2), &[0.99999994, 0.000345]).unwrap();
        index.push("far", t(3), &[0.6, 0.8]).unwrap();
        let q = [1.0, 0.0];
        let hits = scan(&index, &q, &spec(1), None);
        assert_eq!(index.id(hits[0].row), "new");
        let ids: Vec<&str> = scan(&index, &q, &spec(3), None)
            .iter()
            .map(|h| index.id(h.row))
            .collect();
        assert_eq!(ids, ["new", "old", "far"]);
    }

    #[test]
    fn threshold_and_filter() {
        let index = random_index(300, 3, 3);
        let query = normalize(vec![1.0, 0.0, 0.0]).unwrap();
        let keep = |row: usize| row.is_multiple_of(2);
        let s = ScanSpec {
            top_n: 1000,
            min_similarity: Some(0.5),
            keep: Some(&keep),
        };
        let hits = scan(&index, &query, &s, None);
        assert!(!hits.is_empty());
        assert!(hits.iter().all(|h| h.similarity >= 0.5 && h.row % 2 == 0));
        let none = ScanSpec {
            min_similarity: Some(1.5),
            ..s
        };
        assert!(scan(&index, &query, &none, None).is_empty());
        assert!(scan(&VectorIndex::new(3), &query, &spec(3), None).is_empty());
    }
}
