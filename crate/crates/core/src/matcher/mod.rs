//! Exploration: rank a target app's reviews against a source bug report,
//! gate by threshold, suppress reports the target already tracks, and build
//! ground-truth report pairs.

mod index;
pub mod scan;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize, Serializer};

use crate::corpus::{AppReview, BugReport, CorpusStore};
use crate::error::{Error, Result};
use crate::textprep::clean_for_embedding;

pub use index::{EmbeddingTable, VectorIndex};
use scan::{scan, Hit, ScanSpec};

/// Writes a similarity with exactly six decimals.
pub fn six_decimals<S: Serializer>(value: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    let raw = serde_json::value::RawValue::from_string(format!("{value:.6}"))
        .map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub recommend_threshold: f64,
    pub ground_truth_threshold: f64,
    pub duplicate_threshold: f64,
    pub top_n: usize,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            recommend_threshold: 0.9,
            ground_truth_threshold: 0.91,
            duplicate_threshold: 0.91,
            top_n: 3,
        }
    }
}

impl MatchConfig {
    /// Thresholds must lie in (0, 1] and `top_n` be positive. The matching
    /// functions themselves accept any threshold (above 1 matches nothing).
    pub fn validate(&self) -> Result<()> {
        for (name, t) in [
            ("recommend threshold", self.recommend_threshold),
            ("ground-truth threshold", self.ground_truth_threshold),
            ("duplicate threshold", self.duplicate_threshold),
        ] {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::InvalidConfig(format!("{name} {t} not in (0, 1]")));
            }
        }
        if self.top_n == 0 {
            return Err(Error::InvalidConfig("top_n must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ReportRef {
    pub app_id: String,
    pub report_id: String,
}

impl ReportRef {
    pub fn of(report: &BugReport) -> Self {
        Self {
            app_id: report.app_id.clone(),
            report_id: report.report_id.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewMatch {
    pub rank: usize,
    pub review_id: String,
    #[serde(serialize_with = "six_decimals")]
    pub similarity: f64,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuplicateOf {
    pub report_id: String,
    #[serde(serialize_with = "six_decimals")]
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub source_report: ReportRef,
    pub target_app: String,
    pub decided: bool,
    pub duplicate_of: Option<DuplicateOf>,
    pub matches: Vec<ReviewMatch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthPair {
    pub report_a: ReportRef,
    pub report_b: ReportRef,
    #[serde(serialize_with = "six_decimals")]
    pub pair_similarity: f64,
    #[serde(default)]
    pub hit_rank: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub pairs: Vec<GroundTruthPair>,
    /// A-reports whose title could not be embedded.
    pub skipped: usize,
}

/// Extra restrictions for a single ranking query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankOptions {
    pub top_n: usize,
    pub min_similarity: Option<f64>,
    /// Only reviews created strictly before this instant.
    pub created_before: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadTime {
    pub source_report: ReportRef,
    pub review_id: String,
    pub days: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadTimeStats {
    pub mean_days: f64,
    pub median_days: f64,
    pub items: Vec<LeadTime>,
}

/// Read-only view over a frozen store and its embeddings.
pub struct Matcher<'a> {
    store: &'a CorpusStore,
    table: &'a EmbeddingTable,
    cfg: MatchConfig,
    pool: Option<rayon::ThreadPool>,
}

impl<'a> Matcher<'a> {
    /// A serial matcher.
    pub fn new(store: &'a CorpusStore, table: &'a EmbeddingTable, cfg: MatchConfig) -> Self {
        Self {
            store,
            table,
            cfg,
            pool: None,
        }
    }

    /// Scans on a dedicated pool of `threads` workers. Results are identical
    /// to the serial matcher.
    pub fn with_threads(mut self, threads: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        self.pool = Some(pool);
        Ok(self)
    }

    pub fn config(&self) -> &MatchConfig {
        &self.cfg
    }

    fn query_vector(&self, report: &BugReport) -> Result<&'a [f32]> {
        if let Some(v) = self.table.report_vector(&report.app_id, &report.report_id) {
            return Ok(v);
        }
        if clean_for_embedding(&report.title).is_empty() {
            Err(Error::EmptyTextEmbedding)
        } else {
            Err(Error::UnknownReport {
                app_id: report.app_id.clone(),
                report_id: report.report_id.clone(),
            })
        }
    }

    /// Ranks `target`'s reviews against the report title.
    pub fn rank_with(
        &self,
        report: &BugReport,
        target: &str,
        opts: RankOptions,
    ) -> Result<Vec<ReviewMatch>> {
        self.store.app(target)?;
        let query = self.query_vector(report)?;
        let index = self.table.reviews(target)?;
        let keep = |row: usize| {
            opts.created_before
                .is_none_or(|cut| index.created_at(row) < cut)
        };
        let spec = ScanSpec {
            top_n: opts.top_n,
            min_similarity: opts.min_similarity,
            keep: opts
                .created_before
                .map(|_| &keep as &(dyn Fn(usize) -> bool + Sync)),
        };
        let hits = scan(index, query, &spec, self.pool.as_ref());
        Ok(hits
            .into_iter()
            .enumerate()
            .map(|(i, Hit { row, similarity })| ReviewMatch {
                rank: i + 1,
                review_id: index.id(row).to_owned(),
                similarity,
                created_at: index.created_at(row),
            })
            .collect())
    }

    /// Top `top_n` reviews at or above the recommendation threshold.
    pub fn rank_reviews(&self, report: &BugReport, target: &str) -> Result<Vec<ReviewMatch>> {
        self.rank_with(
            report,
            target,
            RankOptions {
                top_n: self.cfg.top_n,
                min_similarity: Some(self.cfg.recommend_threshold),
                created_before: None,
            },
        )
    }

    /// The most similar report already filed for `target`, if it clears the
    /// duplicate threshold.
    pub fn duplicate_check(&self, report: &BugReport, target: &str) -> Result<Option<DuplicateOf>> {
        self.store.app(target)?;
        let query = self.query_vector(report)?;
        let index = self.table.reports(target)?;
        let spec = ScanSpec {
            top_n: 1,
            min_similarity: Some(self.cfg.duplicate_threshold),
            keep: None,
        };
        Ok(scan(index, query, &spec, self.pool.as_ref())
            .first()
            .map(|h| DuplicateOf {
                report_id: index.id(h.row).to_owned(),
                similarity: h.similarity,
            }))
    }

    /// Duplicate gate first, then review matching.
    pub fn recommend(&self, report: &BugReport, target: &str) -> Result<Recommendation> {
        let duplicate_of = self.duplicate_check(report, target)?;
        let matches = if duplicate_of.is_some() {
            Vec::new()
        } else {
            self.rank_reviews(report, target)?
        };
        let decided = duplicate_of.is_none()
            && matches
                .first()
                .is_some_and(|m| m.similarity >= self.cfg.recommend_threshold);
        Ok(Recommendation {
            source_report: ReportRef::of(report),
            target_app: target.to_owned(),
            decided,
            duplicate_of,
            matches,
        })
    }

    /// Recommends every embeddable report of `source` to `target`, in store
    /// order. Returns the recommendations and the number of skipped reports.
    pub fn recommend_all(
        &self,
        source: &str,
        target: &str,
    ) -> Result<(Vec<Recommendation>, usize)> {
        let mut out = Vec::new();
        let mut skipped = 0;
        for report in self.store.reports(source)? {
            match self.recommend(report, target) {
                Ok(r) => out.push(r),
                Err(Error::EmptyTextEmbedding) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
        Ok((out, skipped))
    }

    /// Pairs each A-report with its single best B-report at or above the
    /// ground-truth threshold.
    pub fn build_ground_truth(
        &self,
        reports_a: &[BugReport],
        reports_b: &[BugReport],
    ) -> Result<GroundTruth> {
        if reports_a.is_empty() || reports_b.is_empty() {
            return Err(Error::EmptyCorpus(
                "ground truth needs reports on both sides".into(),
            ));
        }
        let mut index_b = VectorIndex::new(self.table.dim());
        for r in reports_b {
            if let Some(v) = self.table.report_vector(&r.app_id, &r.report_id) {
                index_b.push(&r.report_id, r.created_at, v)?;
            }
        }
        let spec = ScanSpec {
            top_n: 1,
            min_similarity: Some(self.cfg.ground_truth_threshold),
            keep: None,
        };
        let mut truth = GroundTruth::default();
        for a in reports_a {
            let query = match self.query_vector(a) {
                Ok(q) => q,
                Err(Error::EmptyTextEmbedding) => {
                    truth.skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            if let Some(h) = scan(&index_b, query, &spec, self.pool.as_ref()).first() {
                let b_id = index_b.id(h.row);
                let b = reports_b
                    .iter()
                    .find(|r| r.report_id == b_id)
                    .expect("indexed from reports_b");
                truth.pairs.push(GroundTruthPair {
                    report_a: ReportRef::of(a),
                    report_b: ReportRef::of(b),
                    pair_similarity: h.similarity,
                    hit_rank: None,
                });
            }
        }
        Ok(truth)
    }
}

/// Reviews created strictly before `cutoff`, order preserved.
pub fn temporal_review_filter(reviews: &[AppReview], cutoff: DateTime<Utc>) -> Vec<AppReview> {
    reviews
        .iter()
        .filter(|r| r.created_at < cutoff)
        .cloned()
        .collect()
}

/// Days between each decided recommendation's rank-1 review and `run_date`.
pub fn lead_time_stats(recs: &[Recommendation], run_date: DateTime<Utc>) -> Result<LeadTimeStats> {
    let items: Vec<LeadTime> = recs
        .iter()
        .filter(|r| r.decided)
        .filter_map(|r| {
            let top = r.matches.first()?;
            let secs = (run_date - top.created_at).num_milliseconds() as f64 / 1000.0;
            Some(LeadTime {
                source_report: r.source_report.clone(),
                review_id: top.review_id.clone(),
                days: (secs / 86_400.0).max(0.0),
            })
        })
        .collect();
    if items.is_empty() {
        return Err(Error::NoDecidedRecommendations);
    }
    let mean_days = items.iter().map(|i| i.days).sum::<f64>() / items.len() as f64;
    let mut days: Vec<f64> = items.iter().map(|i| i.days).collect();
    days.sort_by(f64::total_cmp);
    let mid = days.len() / 2;
    let median_days = if days.len() % 2 == 1 {
        days[mid]
    } else {
        (days[mid - 1] + days[mid]) / 2.0
    };
    Ok(LeadTimeStats {
        mean_days,
        median_days,
        items,
    })
}
