//! Document model and corpus store.
//!
//! A [`CorpusStore`] is filled by the `ingest_*` methods and then treated as
//! read-only. Reviews of each app are kept in helpful-score order.

mod ingest;
mod persist;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::clean_for_embedding;

pub use ingest::{IngestSummary, MAX_REVIEW_TOKENS, MIN_REVIEW_TOKENS};
pub use persist::FORMAT_VERSION;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppDescriptor {
    pub app_id: String,
    pub name: String,
    pub category: String,
    #[serde(default)]
    pub repo: Option<String>,
}

impl AppDescriptor {
    pub fn new(app_id: &str, name: &str, category: &str) -> Self {
        Self {
            app_id: app_id.to_owned(),
            name: name.to_owned(),
            category: category.to_owned(),
            repo: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugReport {
    #[serde(rename = "id")]
    pub report_id: String,
    pub app_id: String,
    pub title: String,
    pub body: Option<String>,
    pub created_at: DateTime<Utc>,
    #[serde(default)]
    pub labels: Vec<String>,
}

impl BugReport {
    /// Title and body joined, as used by the frequent-word analysis.
    pub fn full_text(&self) -> String {
        match &self.body {
            Some(body) => format!("{}\n{}", self.title, body),
            None => self.title.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppReview {
    #[serde(rename = "id")]
    pub review_id: String,
    pub app_id: String,
    pub text: String,
    pub created_at: DateTime<Utc>,
    pub rating: Option<u8>,
    pub helpful_count: u64,
}

/// Most helpful first, then newest, then by id.
pub fn review_order(a: &AppReview, b: &AppReview) -> Ordering {
    b.helpful_count
        .cmp(&a.helpful_count)
        .then_with(|| b.created_at.cmp(&a.created_at))
        .then_with(|| a.review_id.cmp(&b.review_id))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStore {
    apps: BTreeMap<String, AppDescriptor>,
    reports: BTreeMap<String, Vec<BugReport>>,
    reviews: BTreeMap<String, Vec<AppReview>>,
    /// Cleaned text of every stored review, per app.
    review_texts: BTreeMap<String, HashSet<String>>,
}

impl CorpusStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_app(&mut self, app: AppDescriptor) -> Result<()> {
        if app.app_id.trim().is_empty() {
            return Err(Error::InvalidApp("app_id is empty".into()));
        }
        if app.category.trim().is_empty() {
            return Err(Error::InvalidApp(format!(
                "app `{}` has an empty category",
                app.app_id
            )));
        }
        if self.apps.contains_key(&app.app_id) {
            return Err(Error::DuplicateApp(app.app_id));
        }
        self.reports.insert(app.app_id.clone(), Vec::new());
        self.reviews.insert(app.app_id.clone(), Vec::new());
        self.review_texts.insert(app.app_id.clone(), HashSet::new());
        self.apps.insert(app.app_id.clone(), app);
        Ok(())
    }

    pub fn app(&self, app_id: &str) -> Result<&AppDescriptor> {
        self.apps
            .get(app_id)
            .ok_or_else(|| Error::UnknownApp(app_id.to_owned()))
    }

    pub fn apps(&self) -> impl Iterator<Item = &AppDescriptor> {
        self.apps.values()
    }

    pub fn app_ids(&self) -> Vec<String> {
        self.apps.keys().cloned().collect()
    }

    pub fn reports(&self, app_id: &str) -> Result<&[BugReport]> {
        self.reports
            .get(app_id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownApp(app_id.to_owned()))
    }

    pub fn reviews(&self, app_id: &str) -> Result<&[AppReview]> {
        self.reviews
            .get(app_id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownApp(app_id.to_owned()))
    }

    pub fn report(&self, app_id: &str, report_id: &str) -> Result<&BugReport> {
        self.reports(app_id)?
            .iter()
            .find(|r| r.report_id == report_id)
            .ok_or_else(|| Error::UnknownReport {
                app_id: app_id.to_owned(),
                report_id: report_id.to_owned(),
            })
    }

    /// Adds one report. Returns `false` if its id is already present.
    pub fn add_report(&mut self, report: BugReport) -> Result<bool> {
        let reports = self
            .reports
            .get_mut(&report.app_id)
            .ok_or_else(|| Error::UnknownApp(report.app_id.clone()))?;
        if reports.iter().any(|r| r.report_id == report.report_id) {
            return Ok(false);
        }
        reports.push(report);
        Ok(true)
    }

    /// Adds one review in helpful-score position. Returns `false` if its id
    /// or its cleaned text is already present. No length gate is applied.
    pub fn add_review(&mut self, review: AppReview) -> Result<bool> {
        let reviews = self
            .reviews
            .get_mut(&review.app_id)
            .ok_or_else(|| Error::UnknownApp(review.app_id.clone()))?;
        let texts = self
            .review_texts
            .get_mut(&review.app_id)
            .expect("registered app");
        let cleaned = clean_for_embedding(&review.text).cleaned;
        if texts.contains(&cleaned) || reviews.iter().any(|r| r.review_id == review.review_id) {
            return Ok(false);
        }
        texts.insert(cleaned);
        let pos = reviews
            .binary_search_by(|probe| review_order(probe, &review))
            .unwrap_or_else(|p| p);
        reviews.insert(pos, review);
        Ok(true)
    }

    pub fn report_count(&self) -> usize {
        self.reports.values().map(Vec::len).sum()
    }

    pub fn review_count(&self) -> usize {
        self.reviews.values().map(Vec::len).sum()
    }

    /// Checks every structural invariant; used after loading from disk.
    pub fn validate(&self) -> std::result::Result<(), String> {
        for (app_id, reports) in &self.reports {
            if !self.apps.contains_key(app_id) {
                return Err(format!("reports for unregistered app `{app_id}`"));
            }
            let mut ids = std::collections::HashSet::new();
            for r in reports {
                if &r.app_id != app_id {
                    return Err(format!("report `{}` filed under wrong app", r.report_id));
                }
                if !ids.insert(&r.report_id) {
                    return Err(format!("duplicate report id `{}`", r.report_id));
                }
            }
        }
        for (app_id, reviews) in &self.reviews {
            if !self.apps.contains_key(app_id) {
                return Err(format!("reviews for unregistered app `{app_id}`"));
            }
            let mut ids = std::collections::HashSet::new();
            for r in reviews {
                if &r.app_id != app_id {
                    return Err(format!("review `{}` filed under wrong app", r.review_id));
                }
                if !ids.insert(&r.review_id) {
                    return Err(format!("duplicate review id `{}`", r.review_id));
                }
            }
            if self.review_texts.get(app_id).map_or(0, HashSet::len) != reviews.len() {
                return Err(format!("reviews of `{app_id}` repeat a cleaned text"));
            }
            if reviews
                .windows(2)
                .any(|w| review_order(&w[0], &w[1]) != Ordering::Less)
            {
                return Err(format!("reviews of `{app_id}` out of order"));
            }
        }
        Ok(())
    }
}
