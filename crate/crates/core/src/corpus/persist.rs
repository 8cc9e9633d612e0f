//! On-disk store layout: a directory holding `manifest.json`,
//! `reports.jsonl` and `reviews.jsonl`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::{AppDescriptor, AppReview, BugReport, CorpusStore};
use crate::error::{Error, Result};
use crate::textprep::clean_for_embedding;

pub const FORMAT_VERSION: u64 = 1;

const MANIFEST: &str = "manifest.json";
const REPORTS: &str = "reports.jsonl";
const REVIEWS: &str = "reviews.jsonl";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u64,
    apps: Vec<AppDescriptor>,
    report_count: usize,
    review_count: usize,
}

fn write_jsonl<'a, T: Serialize + 'a>(
    path: &Path,
    items: impl Iterator<Item = &'a T>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| Error::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn corrupt(path: &Path, reason: impl Into<String>) -> Error {
    Error::CorruptStore {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line)
            .map_err(|e| corrupt(path, format!("line {}: {e}", i + 1)))?;
        out.push(item);
    }
    Ok(out)
}

impl CorpusStore {
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_jsonl(&dir.join(REPORTS), self.reports.values().flatten())?;
        write_jsonl(&dir.join(REVIEWS), self.reviews.values().flatten())?;
        // Manifest last: a store without one never loads.
        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            apps: self.apps.values().cloned().collect(),
            report_count: self.report_count(),
            review_count: self.review_count(),
        };
        let path = dir.join(MANIFEST);
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
    }

    /// Loads a store, rejecting anything that does not fully validate.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join(MANIFEST);
        let raw = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let value: serde_json::Value =
            serde_json::from_str(&raw).map_err(|e| corrupt(&path, e.to_string()))?;
        let found = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| corrupt(&path, "missing `format_version`"))?;
        if found != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                path,
                found,
                expected: FORMAT_VERSION,
            });
        }
        let manifest: Manifest =
            serde_json::from_value(value).map_err(|e| corrupt(&path, e.to_string()))?;

        let mut store = CorpusStore::new();
        for app in manifest.apps {
            store
                .register_app(app)
                .map_err(|e| corrupt(&path, e.to_string()))?;
        }

        let reports_path = dir.join(REPORTS);
        let reports: Vec<BugReport> = read_jsonl(&reports_path)?;
        if reports.len() != manifest.report_count {
            return Err(corrupt(
                &reports_path,
                format!(
                    "{} reports, manifest says {}",
                    reports.len(),
                    manifest.report_count
                ),
            ));
        }
        for r in reports {
            store
                .reports
                .get_mut(&r.app_id)
                .ok_or_else(|| corrupt(&reports_path, format!("unknown app `{}`", r.app_id)))?
                .push(r);
        }

        let reviews_path = dir.join(REVIEWS);
        let reviews: Vec<AppReview> = read_jsonl(&reviews_path)?;
        if reviews.len() != manifest.review_count {
            return Err(corrupt(
                &reviews_path,
                format!(
                    "{} reviews, manifest says {}",
                    reviews.len(),
                    manifest.review_count
                ),
            ));
        }
        for r in reviews {
            store
                .review_texts
                .get_mut(&r.app_id)
                .ok_or_else(|| corrupt(&reviews_path, format!("unknown app `{}`", r.app_id)))?
                .insert(clean_for_embedding(&r.text).cleaned);
            store
                .reviews
                .get_mut(&r.app_id)
                .expect("registered app")
                .push(r);
        }

        store.validate().map_err(|reason| corrupt(dir, reason))?;
        Ok(store)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    fn fixture() -> CorpusStore {
        let mut s = CorpusStore::new();
        s.register_app(AppDescriptor::new("firefox", "Firefox", "browser"))
            .unwrap();
        s.register_app(AppDescriptor {
            repo: Some("brave/brave-browser".into()),
            ..AppDescriptor::new("brave", "Brave", "browser")
        })
        .unwrap();
        let reports = r#"{"id": "1", "title": "Crash on start", "body": "steps\nmore", "created_at": "2021-01-01T00:00:00Z", "labels": ["bug"]}"#;
        s.ingest_reports_from(reports.as_bytes(), "r", "firefox")
            .unwrap();
        let reviews = r#"{"id": "r1", "text": "the browser keeps crashing every single time i open a new tab", "created_at": "2021-02-01T00:00:00Z", "rating": 1, "helpful_count": 4}
{"id": "r2", "text": "sync with my desktop never works and bookmarks are lost again", "created_at": "2021-02-02T00:00:00Z", "rating": null, "helpful_count": 0}"#;
        s.ingest_reviews_from(reviews.as_bytes(), "v", "brave")
            .unwrap();
        s
    }

    #[test]
    fn round_trip_empty_and_fixture() {
        for store in [CorpusStore::new(), fixture()] {
            let dir = tempfile::tempdir().unwrap();
            store.save(dir.path()).unwrap();
            assert_eq!(CorpusStore::load(dir.path()).unwrap(), store);
        }
    }

    #[test]
    fn truncated_files_never_load() {
        let dir = tempfile::tempdir().unwrap();
        fixture().save(dir.path()).unwrap();

        let reviews = dir.path().join(REVIEWS);
        let full = std::fs::read_to_string(&reviews).unwrap();
        // Truncated mid-record.
        std::fs::write(&reviews, &full[..full.len() - 20]).unwrap();
        assert!(matches!(
            CorpusStore::load(dir.path()),
            Err(Error::CorruptStore { .. })
        ));
        // Truncated at a record boundary.
        let first_line = full.lines().next().unwrap();
        std::fs::write(&reviews, format!("{first_line}\n")).unwrap();
        assert!(matches!(
            CorpusStore::load(dir.path()),
            Err(Error::CorruptStore { .. })
        ));

        let manifest = dir.path().join(MANIFEST);
        let m = std::fs::read_to_string(&manifest).unwrap();
        std::fs::write(&manifest, &m[..m.len() / 2]).unwrap();
        assert!(matches!(
            CorpusStore::load(dir.path()),
            Err(Error::CorruptStore { .. })
        ));
    }

    #[test]
    fn unknown_version_rejected() {
        let dir = tempfile::tempdir().unwrap();
        fixture().save(dir.path()).unwrap();
        let manifest = dir.path().join(MANIFEST);
        let m = std::fs::read_to_string(&manifest).unwrap();
        std::fs::write(
            &manifest,
            m.replace("\"format_version\": 1", "\"format_version\": 2"),
        )
        .unwrap();
        assert!(matches!(
            CorpusStore::load(dir.path()),
            Err(Error::VersionMismatch { found: 2, .. })
        ));
    }

    #[test]
    fn missing_directory_is_io() {
        assert!(matches!(
            CorpusStore::load("/nonexistent/store"),
            Err(Error::Io { .. })
        ));
    }

    fn arb_store() -> impl Strategy<Value = CorpusStore> {
        let review = (
            "[a-z]{1,4}",
            "[a-z ]{1,30}",
            0i64..1_000_000,
            proptest::option::of(1u8..=5),
            0u64..5,
        );
        let report = (
            "[0-9]{1,3}",
            "[a-z ]{1,20}",
            proptest::option::of("[a-z\n\"]{0,10}"),
            0i64..1_000_000,
        );
        (
            proptest::collection::vec(review, 0..12),
            proptest::collection::vec(report, 0..8),
        )
            .prop_map(|(reviews, reports)| {
                let mut s = CorpusStore::new();
                s.register_app(AppDescriptor::new("a", "A", "cat")).unwrap();
                s.register_app(AppDescriptor::new("b", "B", "cat")).unwrap();
                for (id, title, body, t) in reports {
                    let list = s.reports.get_mut("a").unwrap();
                    if list.iter().all(|r| r.report_id != id) {
                        list.push(BugReport {
                            report_id: id,
                            app_id: "a".into(),
                            title,
                            body,
                            created_at: Utc.timestamp_opt(t, 0).unwrap(),
                            labels: vec!["x".into()],
                        });
                    }
                }
                for (id, text, t, rating, helpful) in reviews {
                    s.add_review(AppReview {
                        review_id: id,
                        app_id: "b".into(),
                        text,
                        created_at: Utc.timestamp_opt(t, 0).unwrap(),
                        rating,
                        helpful_count: helpful,
                    })
                    .unwrap();
                }
                s
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn persistence_round_trip(store in arb_store()) {
            let dir = tempfile::tempdir().unwrap();
            store.save(dir.path()).unwrap();
            prop_assert_eq!(CorpusStore::load(dir.path()).unwrap(), store);
        }
    }
}
