use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde_json::{Map, Value};

use super::{review_order, AppReview, BugReport, CorpusStore};
use crate::error::{Error, Result};
use crate::textprep::clean_for_embedding;

/// Reviews with fewer cleaned words than this are dropped at ingestion.
pub const MIN_REVIEW_TOKENS: usize = 10;
/// Reviews with more cleaned words than this are dropped at ingestion.
pub const MAX_REVIEW_TOKENS: usize = 200;

/// Outcome of one ingestion call.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct IngestSummary {
    pub accepted: usize,
    pub malformed: usize,
    pub already_present: usize,
    pub too_short: usize,
    pub too_long: usize,
    pub duplicate_text: usize,
    /// One entry per malformed line: `line N: reason`.
    pub warnings: Vec<String>,
}

struct Line {
    number: usize,
    fields: std::result::Result<Map<String, Value>, String>,
}

fn read_lines(reader: impl Read, source: &Path) -> Result<Vec<Line>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::io(source, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields = match serde_json::from_str::<Value>(&line) {
            Ok(Value::Object(map)) => Ok(map),
            Ok(_) => Err("record is not a JSON object".to_owned()),
            Err(e) => Err(format!("invalid JSON: {e}")),
        };
        out.push(Line {
            number: i + 1,
            fields,
        });
    }
    Ok(out)
}

fn id_field(map: &Map<String, Value>) -> std::result::Result<String, String> {
    match map.get("id") {
        Some(Value::String(s)) if !s.trim().is_empty() => Ok(s.clone()),
        Some(Value::Number(n)) if n.is_u64() || n.is_i64() => Ok(n.to_string()),
        _ => Err("missing or empty `id`".into()),
    }
}

fn text_field(map: &Map<String, Value>, key: &str) -> std::result::Result<String, String> {
    match map.get(key) {
        Some(Value::String(s)) if !s.trim().is_empty() => Ok(s.clone()),
        _ => Err(format!("missing or empty `{key}`")),
    }
}

fn timestamp_field(
    map: &Map<String, Value>,
    now: DateTime<Utc>,
) -> std::result::Result<DateTime<Utc>, String> {
    let raw = match map.get("created_at") {
        Some(Value::String(s)) => s,
        _ => return Err("missing `created_at`".into()),
    };
    let ts = DateTime::parse_from_rfc3339(raw)
        .map_err(|e| format!("`created_at` is not RFC 3339 ({e})"))?
        .with_timezone(&Utc);
    if ts > now {
        return Err(format!("`created_at` {raw} lies in the future"));
    }
    Ok(ts)
}

fn parse_report(
    map: &Map<String, Value>,
    app_id: &str,
    now: DateTime<Utc>,
) -> std::result::Result<BugReport, String> {
    let body = match map.get("body") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err("`body` must be a string or null".into()),
    };
    let labels = match map.get("labels") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| v.as_str().map(str::to_owned))
            .collect::<Option<Vec<_>>>()
            .ok_or("`labels` must be a list of strings")?,
        Some(_) => return Err("`labels` must be a list of strings".into()),
    };
    Ok(BugReport {
        report_id: id_field(map)?,
        app_id: app_id.to_owned(),
        title: text_field(map, "title")?,
        body,
        created_at: timestamp_field(map, now)?,
        labels,
    })
}

fn parse_review(
    map: &Map<String, Value>,
    app_id: &str,
    now: DateTime<Utc>,
) -> std::result::Result<AppReview, String> {
    let rating = match map.get("rating") {
        None | Some(Value::Null) => None,
        Some(v) => match v.as_u64() {
            Some(r @ 1..=5) => Some(r as u8),
            _ => return Err("`rating` must be an integer in 1..=5 or null".into()),
        },
    };
    let helpful_count = match map.get("helpful_count") {
        None | Some(Value::Null) => 0,
        Some(v) => v
            .as_u64()
            .ok_or("`helpful_count` must be a non-negative integer")?,
    };
    Ok(AppReview {
        review_id: id_field(map)?,
        app_id: app_id.to_owned(),
        text: text_field(map, "text")?,
        created_at: timestamp_field(map, now)?,
        rating,
        helpful_count,
    })
}

/// Parses every line; fails as a whole when more than half are malformed.
fn parse_all<T>(
    lines: Vec<Line>,
    source: &Path,
    summary: &mut IngestSummary,
    parse: impl Fn(&Map<String, Value>) -> std::result::Result<T, String>,
) -> Result<Vec<T>> {
    let total = lines.len();
    let mut records = Vec::with_capacity(total);
    let mut first_bad: Option<(usize, String)> = None;
    for line in lines {
        match line.fields.and_then(|m| parse(&m)) {
            Ok(r) => records.push(r),
            Err(reason) => {
                summary.malformed += 1;
                summary
                    .warnings
                    .push(format!("line {}: {reason}", line.number));
                first_bad.get_or_insert((line.number, reason));
            }
        }
    }
    if summary.malformed * 2 > total {
        let (first_line, first_reason) = first_bad.unwrap_or_default();
        return Err(Error::SchemaViolation {
            path: source.to_path_buf(),
            malformed: summary.malformed,
            total,
            first_line,
            first_reason,
        });
    }
    Ok(records)
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::io(path, e))
}

impl CorpusStore {
    /// Imports bug reports from a JSON Lines file.
    pub fn ingest_reports(
        &mut self,
        path: impl AsRef<Path>,
        app_id: &str,
    ) -> Result<IngestSummary> {
        let path = path.as_ref();
        self.app(app_id)?;
        let file = open(path)?;
        self.ingest_reports_from(file, path, app_id)
    }

    pub fn ingest_reports_from(
        &mut self,
        reader: impl Read,
        source: impl Into<PathBuf>,
        app_id: &str,
    ) -> Result<IngestSummary> {
        let source = source.into();
        self.app(app_id)?;
        let now = Utc::now();
        let mut summary = IngestSummary::default();
        let lines = read_lines(reader, &source)?;
        let records = parse_all(lines, &source, &mut summary, |m| {
            parse_report(m, app_id, now)
        })?;

        let reports = self.reports.get_mut(app_id).expect("registered app");
        let mut ids: HashSet<String> = reports.iter().map(|r| r.report_id.clone()).collect();
        for report in records {
            if ids.insert(report.report_id.clone()) {
                reports.push(report);
                summary.accepted += 1;
            } else {
                summary.already_present += 1;
            }
        }
        Ok(summary)
    }

    /// Imports reviews from a JSON Lines file, applying the word-count gate
    /// and dropping reviews whose cleaned text is already present.
    pub fn ingest_reviews(
        &mut self,
        path: impl AsRef<Path>,
        app_id: &str,
    ) -> Result<IngestSummary> {
        let path = path.as_ref();
        self.app(app_id)?;
        let file = open(path)?;
        self.ingest_reviews_from(file, path, app_id)
    }

    pub fn ingest_reviews_from(
        &mut self,
        reader: impl Read,
        source: impl Into<PathBuf>,
        app_id: &str,
    ) -> Result<IngestSummary> {
        let source = source.into();
        self.app(app_id)?;
        let now = Utc::now();
        let mut summary = IngestSummary::default();
        let lines = read_lines(reader, &source)?;
        let mut records = parse_all(lines, &source, &mut summary, |m| {
            parse_review(m, app_id, now)
        })?;
        // Within one file the most helpful copy of a text wins.
        records.sort_by(review_order);

        let reviews = self.reviews.get_mut(app_id).expect("registered app");
        let mut ids: HashSet<String> = reviews.iter().map(|r| r.review_id.clone()).collect();
        let texts = self.review_texts.get_mut(app_id).expect("registered app");
        for review in records {
            if ids.contains(&review.review_id) {
                summary.already_present += 1;
                continue;
            }
            let cleaned = clean_for_embedding(&review.text);
            if cleaned.token_count < MIN_REVIEW_TOKENS {
                summary.too_short += 1;
                continue;
            }
            if cleaned.token_count > MAX_REVIEW_TOKENS {
                summary.too_long += 1;
                continue;
            }
            if !texts.insert(cleaned.cleaned) {
                summary.duplicate_text += 1;
                continue;
            }
            ids.insert(review.review_id.clone());
            reviews.push(review);
            summary.accepted += 1;
        }
        reviews.sort_by(review_order);
        Ok(summary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::AppDescriptor;

    fn store() -> CorpusStore {
        let mut s = CorpusStore::new();
        s.register_app(AppDescriptor::new("brave", "Brave", "browser"))
            .unwrap();
        s
    }

    fn words(n: usize) -> String {
        (0..n)
            .map(|i| format!("w{}", char::from(b'a' + (i % 26) as u8)).repeat(1 + i / 26))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn review_line(id: &str, text: &str, helpful: u64) -> String {
        serde_json::json!({
            "id": id, "text": text, "created_at": "2021-03-01T10:00:00Z",
            "rating": 2, "helpful_count": helpful
        })
        .to_string()
    }

    #[test]
    fn reports_well_formed() {
        let mut s = store();
        let data = r#"{"id": "1", "title": "Crash on start", "body": null, "created_at": "2021-01-01T00:00:00Z", "labels": ["bug"]}
{"id": "2", "title": "Sync fails", "body": "steps", "created_at": "2021-01-02T00:00:00+02:00", "labels": []}
{"id": 3, "title": "Tabs vanish", "created_at": "2021-01-03T00:00:00Z"}
"#;
        let summary = s
            .ingest_reports_from(data.as_bytes(), "r.jsonl", "brave")
            .unwrap();
        assert_eq!(summary.accepted, 3);
        let r = s.report("brave", "2").unwrap();
        assert_eq!(r.created_at.to_rfc3339(), "2021-01-01T22:00:00+00:00");
    }

    #[test]
    fn reports_missing_title_counted() {
        let mut s = store();
        let data = r#"{"id": "1", "title": "Crash", "created_at": "2021-01-01T00:00:00Z"}
{"id": "2", "created_at": "2021-01-01T00:00:00Z"}
"#;
        let summary = s
            .ingest_reports_from(data.as_bytes(), "r.jsonl", "brave")
            .unwrap();
        assert_eq!(summary.accepted, 1);
        assert_eq!(summary.malformed, 1);
        assert_eq!(summary.warnings.len(), 1);
        assert!(summary.warnings[0].starts_with("line 2:"));
    }

    #[test]
    fn empty_file_is_zero() {
        let mut s = store();
        let summary = s
            .ingest_reports_from("".as_bytes(), "r.jsonl", "brave")
            .unwrap();
        assert_eq!(summary, IngestSummary::default());
    }

    #[test]
    fn mostly_malformed_is_schema_violation() {
        let mut s = store();
        let data = "{\"id\": \"1\", \"title\": \"x\", \"created_at\": \"2021-01-01T00:00:00Z\"}\nnot json\n[1]\n";
        let err = s
            .ingest_reports_from(data.as_bytes(), "r.jsonl", "brave")
            .unwrap_err();
        assert!(matches!(
            err,
            Error::SchemaViolation {
                malformed: 2,
                total: 3,
                first_line: 2,
                ..
            }
        ));
        assert_eq!(s.report_count(), 0);
    }

    #[test]
    fn future_and_missing_timestamps_rejected() {
        let mut s = store();
        let data = r#"{"id": "1", "title": "x", "created_at": "2999-01-01T00:00:00Z"}
{"id": "2", "title": "x"}
{"id": "3", "title": "x", "created_at": "yesterday"}
{"id": "4", "title": "x", "created_at": "2020-01-01T00:00:00Z"}
{"id": "5", "title": "x", "created_at": "2020-01-01T00:00:00Z"}
{"id": "6", "title": "x", "created_at": "2020-01-01T00:00:00Z"}
"#;
        let summary = s
            .ingest_reports_from(data.as_bytes(), "r.jsonl", "brave")
            .unwrap();
        assert_eq!((summary.accepted, summary.malformed), (3, 3));
    }

    #[test]
    fn unknown_app_and_missing_file() {
        let mut s = store();
        assert!(matches!(
            s.ingest_reports("/nonexistent/r.jsonl", "nope"),
            Err(Error::UnknownApp(_))
        ));
        assert!(matches!(
            s.ingest_reviews("/nonexistent/r.jsonl", "brave"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn review_length_gate() {
        let mut s = store();
        let data = [
            review_line("short", &words(5), 0),
            review_line("ok", &words(12), 0),
            review_line("long", &words(250), 0),
            review_line("edge_lo", &format!("{} zz", words(9)), 0),
            review_line("edge_hi", &words(200), 0),
        ]
        .join("\n");
        let summary = s
            .ingest_reviews_from(data.as_bytes(), "v.jsonl", "brave")
            .unwrap();
        assert_eq!(summary.accepted, 3);
        assert_eq!(summary.too_short, 1);
        assert_eq!(summary.too_long, 1);
    }

    #[test]
    fn review_dedup_keeps_most_helpful_and_orders() {
        let mut s = store();
        let text = words(12);
        let data = [
            review_line("a", &text, 1),
            review_line("b", &text, 7),
            review_line("c", &words(15), 3),
        ]
        .join("\n");
        let summary = s
            .ingest_reviews_from(data.as_bytes(), "v.jsonl", "brave")
            .unwrap();
        assert_eq!(summary.accepted, 2);
        assert_eq!(summary.duplicate_text, 1);
        let ids: Vec<_> = s
            .reviews("brave")
            .unwrap()
            .iter()
            .map(|r| r.review_id.as_str())
            .collect();
        assert_eq!(ids, ["b", "c"]);
    }

    #[test]
    fn reingestion_is_idempotent() {
        let mut s = store();
        let data = [
            review_line("a", &words(12), 1),
            review_line("b", &words(14), 0),
        ]
        .join("\n");
        assert_eq!(
            s.ingest_reviews_from(data.as_bytes(), "v", "brave")
                .unwrap()
                .accepted,
            2
        );
        let again = s
            .ingest_reviews_from(data.as_bytes(), "v", "brave")
            .unwrap();
        assert_eq!(again.accepted, 0);
        assert_eq!(again.already_present, 2);
        assert_eq!(s.review_count(), 2);

        let reports = r#"{"id": "1", "title": "x", "created_at": "2020-01-01T00:00:00Z"}"#;
        s.ingest_reports_from(reports.as_bytes(), "r", "brave")
            .unwrap();
        assert_eq!(
            s.ingest_reports_from(reports.as_bytes(), "r", "brave")
                .unwrap()
                .accepted,
            0
        );
        assert_eq!(s.report_count(), 1);
    }
}
