use std::collections::{BTreeMap, HashMap};

use chrono::{DateTime, Utc};

use crate::corpus::CorpusStore;
use crate::embedding::{EmbeddingService, EmptyPolicy};
use crate::error::{Error, Result};

/// Unit vectors stored row-major in one contiguous buffer, with the id and
/// timestamp needed for tie-breaking.
#[derive(Debug, Clone, Default)]
pub struct VectorIndex {
    dim: usize,
    ids: Vec<String>,
    created_at: Vec<DateTime<Utc>>,
    data: Vec<f32>,
    positions: HashMap<String, usize>,
}

impl VectorIndex {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ..Self::default()
        }
    }

    pub fn push(&mut self, id: &str, created_at: DateTime<Utc>, values: &[f32]) -> Result<()> {
        if values.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: values.len(),
            });
        }
        self.positions.insert(id.to_owned(), self.ids.len());
        self.ids.push(id.to_owned());
        self.created_at.push(created_at);
        self.data.extend_from_slice(values);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, row: usize) -> &str {
        &self.ids[row]
    }

    pub fn created_at(&self, row: usize) -> DateTime<Utc> {
        self.created_at[row]
    }

    pub fn row(&self, row: usize) -> &[f32] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.positions.get(id).map(|&r| self.row(r))
    }
}

/// Embeddings of every report title and review in a store, per app.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    dim: usize,
    reports: BTreeMap<String, VectorIndex>,
    reviews: BTreeMap<String, VectorIndex>,
    /// Report titles that could not be embedded.
    pub skipped_reports: usize,
    /// Review texts that could not be embedded.
    pub skipped_reviews: usize,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ..Self::default()
        }
    }

    /// Embeds titles and reviews of every app in the store.
    pub fn build(store: &CorpusStore, service: &mut EmbeddingService) -> Result<Self> {
        let ids = store.app_ids();
        let ids: Vec<&str> = ids.iter().map(String::as_str).collect();
        Self::build_for(store, service, &ids)
    }

    /// Embeds titles and reviews of the listed apps only.
    pub fn build_for(
        store: &CorpusStore,
        service: &mut EmbeddingService,
        app_ids: &[&str],
    ) -> Result<Self> {
        let mut table = EmbeddingTable::new(service.dim());
        for &app in app_ids {
            let reports = store.reports(app)?;
            let titles: Vec<&str> = reports.iter().map(|r| r.title.as_str()).collect();
            let vectors = service.embed_corpus(&titles, EmptyPolicy::Skip)?;
            let index = table
                .reports
                .entry(app.to_owned())
                .or_insert_with(|| VectorIndex::new(table.dim));
            for (r, v) in reports.iter().zip(vectors) {
                match v {
                    Some(v) => index.push(&r.report_id, r.created_at, v.values())?,
                    None => table.skipped_reports += 1,
                }
            }

            let reviews = store.reviews(app)?;
            let texts: Vec<&str> = reviews.iter().map(|r| r.text.as_str()).collect();
            let vectors = service.embed_corpus(&texts, EmptyPolicy::Skip)?;
            let index = table
                .reviews
                .entry(app.to_owned())
                .or_insert_with(|| VectorIndex::new(table.dim));
            for (r, v) in reviews.iter().zip(vectors) {
                match v {
                    Some(v) => index.push(&r.review_id, r.created_at, v.values())?,
                    None => table.skipped_reviews += 1,
                }
            }
        }
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn insert_reports(&mut self, app_id: &str, index: VectorIndex) {
        self.reports.insert(app_id.to_owned(), index);
    }

    pub fn insert_reviews(&mut self, app_id: &str, index: VectorIndex) {
        self.reviews.insert(app_id.to_owned(), index);
    }

    pub fn reports(&self, app_id: &str) -> Result<&VectorIndex> {
        self.reports
            .get(app_id)
            .ok_or_else(|| Error::UnknownApp(app_id.to_owned()))
    }

    pub fn reviews(&self, app_id: &str) -> Result<&VectorIndex> {
        self.reviews
            .get(app_id)
            .ok_or_else(|| Error::UnknownApp(app_id.to_owned()))
    }

    pub fn report_vector(&self, app_id: &str, report_id: &str) -> Option<&[f32]> {
        self.reports.get(app_id)?.get(report_id)
    }
}
