//! Python bindings for `revrec-core`.

use std::path::PathBuf;

use pyo3::exceptions::{PyKeyError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;

use revrec_core::corpus::{self, AppDescriptor};
use revrec_core::embedding::{self, EmbedderConfig, EmbeddingService};
use revrec_core::matcher::{EmbeddingTable, MatchConfig, Matcher};
use revrec_core::metrics::{self, HitProfile};
use revrec_core::textprep::{self, WordSet};
use revrec_core::Error;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io { .. } => PyOSError::new_err(err.to_string()),
        Error::UnknownApp(_) => PyKeyError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn json_to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyfunction]
fn clean_for_embedding(text: &str) -> String {
    textprep::clean_for_embedding(text).cleaned
}

#[pyfunction]
fn clean_for_analysis(text: &str) -> Vec<String> {
    textprep::clean_for_analysis(text)
}

#[pyfunction]
fn top_k_frequent(docs: Vec<String>, k: usize) -> PyResult<Vec<String>> {
    let set = textprep::top_k_frequent(&docs, k).map_err(to_py)?;
    Ok(set.words().map(str::to_owned).collect())
}

#[pyfunction]
fn overlap_rate(x: Vec<String>, y: Vec<String>) -> PyResult<f64> {
    metrics::overlap_rate(&WordSet::from_words(x), &WordSet::from_words(y)).map_err(to_py)
}

/// One entry per judged pair: the 1-based rank of the first hit, or None.
fn profile(ranks: &[Option<usize>]) -> PyResult<HitProfile> {
    let mut p = HitProfile::new(ranks.len()).map_err(to_py)?;
    for (item, rank) in ranks.iter().enumerate() {
        if let Some(r) = rank {
            p.record(item, *r).map_err(to_py)?;
        }
    }
    Ok(p)
}

#[pyfunction]
fn acc_at_n(ranks: Vec<Option<usize>>, n: usize) -> PyResult<f64> {
    Ok(metrics::acc_at_n(&profile(&ranks)?, n))
}

#[pyfunction]
fn mrr_at_n(ranks: Vec<Option<usize>>, n: usize) -> PyResult<f64> {
    Ok(metrics::mrr_at_n(&profile(&ranks)?, n))
}

#[pyfunction]
#[pyo3(signature = (text, dim = 256, seed = 42))]
fn hash_embed(text: &str, dim: usize, seed: u64) -> PyResult<Vec<f32>> {
    let v = embedding::embed(text, &EmbedderConfig::hash(dim, seed)).map_err(to_py)?;
    Ok(v.into_values())
}

#[pyfunction]
fn cosine(a: Vec<f32>, b: Vec<f32>) -> PyResult<f64> {
    embedding::cosine_slices(&a, &b).map_err(to_py)
}

/// Apps, bug reports and reviews held in memory.
#[pyclass(module = "revrec")]
struct CorpusStore {
    inner: corpus::CorpusStore,
}

#[pymethods]
impl CorpusStore {
    #[new]
    fn new() -> Self {
        Self {
            inner: corpus::CorpusStore::new(),
        }
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: corpus::CorpusStore::load(path).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(path).map_err(to_py)
    }

    #[pyo3(signature = (app_id, category, name = None))]
    fn register_app(&mut self, app_id: &str, category: &str, name: Option<&str>) -> PyResult<()> {
        let app = AppDescriptor::new(app_id, name.unwrap_or(app_id), category);
        self.inner.register_app(app).map_err(to_py)
    }

    fn ingest_reports<'py>(
        &mut self,
        py: Python<'py>,
        path: PathBuf,
        app_id: &str,
    ) -> PyResult<Bound<'py, PyAny>> {
        let summary = self.inner.ingest_reports(path, app_id).map_err(to_py)?;
        json_to_py(py, &summary)
    }

    fn ingest_reviews<'py>(
        &mut self,
        py: Python<'py>,
        path: PathBuf,
        app_id: &str,
    ) -> PyResult<Bound<'py, PyAny>> {
        let summary = self.inner.ingest_reviews(path, app_id).map_err(to_py)?;
        json_to_py(py, &summary)
    }

    fn app_ids(&self) -> Vec<String> {
        self.inner.app_ids()
    }

    fn report_ids(&self, app_id: &str) -> PyResult<Vec<String>> {
        let reports = self.inner.reports(app_id).map_err(to_py)?;
        Ok(reports.iter().map(|r| r.report_id.clone()).collect())
    }

    fn review_ids(&self, app_id: &str) -> PyResult<Vec<String>> {
        let reviews = self.inner.reviews(app_id).map_err(to_py)?;
        Ok(reviews.iter().map(|r| r.review_id.clone()).collect())
    }

    fn __len__(&self) -> usize {
        self.inner.report_count() + self.inner.review_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "CorpusStore(apps={}, reports={}, reviews={})",
            self.inner.app_ids().len(),
            self.inner.report_count(),
            self.inner.review_count()
        )
    }
}

/// Embeds a store once and answers matching queries against it.
#[pyclass(module = "revrec")]
struct Engine {
    store: corpus::CorpusStore,
    table: EmbeddingTable,
    cfg: MatchConfig,
}

impl Engine {
    fn matcher(&self) -> Matcher<'_> {
        Matcher::new(&self.store, &self.table, self.cfg.clone())
    }
}

#[pymethods]
impl Engine {
    #[new]
    #[pyo3(signature = (
        store, *, dim = 256, seed = 42, threshold = 0.9, gt_threshold = 0.91,
        dup_threshold = 0.91, top_n = 3
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        store: &CorpusStore,
        dim: usize,
        seed: u64,
        threshold: f64,
        gt_threshold: f64,
        dup_threshold: f64,
        top_n: usize,
    ) -> PyResult<Self> {
        let cfg = MatchConfig {
            recommend_threshold: threshold,
            ground_truth_threshold: gt_threshold,
            duplicate_threshold: dup_threshold,
            top_n,
        };
        cfg.validate().map_err(to_py)?;
        let mut service =
            EmbeddingService::from_config(&EmbedderConfig::hash(dim, seed)).map_err(to_py)?;
        let table = EmbeddingTable::build(&store.inner, &mut service).map_err(to_py)?;
        Ok(Self {
            store: store.inner.clone(),
            table,
            cfg,
        })
    }

    fn recommend<'py>(
        &self,
        py: Python<'py>,
        source_app: &str,
        target_app: &str,
    ) -> PyResult<Bound<'py, PyAny>> {
        let (recs, _) = self
            .matcher()
            .recommend_all(source_app, target_app)
            .map_err(to_py)?;
        json_to_py(py, &recs)
    }

    fn rank_reviews<'py>(
        &self,
        py: Python<'py>,
        source_app: &str,
        report_id: &str,
        target_app: &str,
    ) -> PyResult<Bound<'py, PyAny>> {
        let report = self.store.report(source_app, report_id).map_err(to_py)?;
        let matches = self
            .matcher()
            .rank_reviews(report, target_app)
            .map_err(to_py)?;
        json_to_py(py, &matches)
    }

    fn ground_truth<'py>(
        &self,
        py: Python<'py>,
        app_a: &str,
        app_b: &str,
    ) -> PyResult<Bound<'py, PyAny>> {
        let a = self.store.reports(app_a).map_err(to_py)?;
        let b = self.store.reports(app_b).map_err(to_py)?;
        let gt = self.matcher().build_ground_truth(a, b).map_err(to_py)?;
        json_to_py(py, &gt.pairs)
    }
}

#[pymodule]
pub fn revrec(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(clean_for_embedding, m)?)?;
    m.add_function(wrap_pyfunction!(clean_for_analysis, m)?)?;
    m.add_function(wrap_pyfunction!(top_k_frequent, m)?)?;
    m.add_function(wrap_pyfunction!(overlap_rate, m)?)?;
    m.add_function(wrap_pyfunction!(acc_at_n, m)?)?;
    m.add_function(wrap_pyfunction!(mrr_at_n, m)?)?;
    m.add_function(wrap_pyfunction!(hash_embed, m)?)?;
    m.add_function(wrap_pyfunction!(cosine, m)?)?;
    m.add_class::<CorpusStore>()?;
    m.add_class::<Engine>()?;
    Ok(())
}
