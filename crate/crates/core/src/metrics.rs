//! Evaluation: overlap rate, Acc@N, MRR@N, the frequent-word overlap matrix
//! and the ground-truth evaluation harness.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusStore;
use crate::error::{Error, Result};
use crate::matcher::{GroundTruthPair, Matcher, RankOptions};
use crate::textprep::{TokenStats, WordSet};

/// Fraction of `x` that also occurs in `y`.
pub fn overlap_rate(x: &WordSet, y: &WordSet) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::EmptySet);
    }
    let ys: HashSet<&str> = y.words().collect();
    let shared = x.words().filter(|w| ys.contains(w)).count();
    Ok(shared as f64 / x.len() as f64)
}

/// Ranks at which ground-truth items were hit. Items without an entry are
/// misses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HitProfile {
    length: usize,
    hit_ranks: BTreeMap<usize, usize>,
}

impl HitProfile {
    pub fn new(length: usize) -> Result<Self> {
        if length == 0 {
            return Err(Error::EmptyCorpus("ground truth has no items".into()));
        }
        Ok(Self {
            length,
            hit_ranks: BTreeMap::new(),
        })
    }

    /// Builds a profile from cumulative hit counts: `cumulative[r - 1]` items
    /// were hit at rank `r` or better.
    pub fn from_cumulative(length: usize, cumulative: &[usize]) -> Result<Self> {
        let mut profile = Self::new(length)?;
        let mut item = 0;
        let mut prev = 0;
        for (i, &total) in cumulative.iter().enumerate() {
            if total < prev || total > length {
                return Err(Error::InvalidConfig(format!(
                    "cumulative hits must be non-decreasing and at most {length}"
                )));
            }
            for _ in prev..total {
                profile.record(item, i + 1)?;
                item += 1;
            }
            prev = total;
        }
        Ok(profile)
    }

    pub fn record(&mut self, item: usize, rank: usize) -> Result<()> {
        if item >= self.length {
            return Err(Error::InvalidConfig(format!(
                "item {item} outside ground truth of {}",
                self.length
            )));
        }
        if rank == 0 {
            return Err(Error::InvalidConfig("ranks are 1-based".into()));
        }
        self.hit_ranks.insert(item, rank);
        Ok(())
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn hit_ranks(&self) -> &BTreeMap<usize, usize> {
        &self.hit_ranks
    }

    pub fn hits_within(&self, n: usize) -> usize {
        self.hit_ranks.values().filter(|&&r| r <= n).count()
    }
}

pub fn acc_at_n(profile: &HitProfile, n: usize) -> f64 {
    profile.hits_within(n) as f64 / profile.length as f64
}

/// Misses, and hits below rank `n`, contribute zero.
pub fn mrr_at_n(profile: &HitProfile, n: usize) -> f64 {
    let sum: f64 = profile
        .hit_ranks
        .values()
        .filter(|&&r| r <= n)
        .map(|&r| 1.0 / r as f64)
        .sum();
    sum / profile.length as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub length: usize,
    pub n_values: Vec<usize>,
    pub hits: BTreeMap<usize, usize>,
    pub acc: BTreeMap<usize, f64>,
    pub mrr: BTreeMap<usize, f64>,
}

impl EvalReport {
    pub fn from_profile(profile: &HitProfile, n_values: &[usize]) -> Result<Self> {
        check_cutoffs(n_values)?;
        let mut n_values = n_values.to_vec();
        n_values.sort_unstable();
        n_values.dedup();
        Ok(Self {
            length: profile.length(),
            hits: n_values
                .iter()
                .map(|&n| (n, profile.hits_within(n)))
                .collect(),
            acc: n_values
                .iter()
                .map(|&n| (n, acc_at_n(profile, n)))
                .collect(),
            mrr: n_values
                .iter()
                .map(|&n| (n, mrr_at_n(profile, n)))
                .collect(),
            n_values,
        })
    }

    /// Plain-text table: hits, then Acc@N and MRR@N in percent.
    pub fn render_table(&self) -> String {
        let label_width = 18;
        let col = 8;
        let mut out = String::new();
        let _ = write!(out, "{:<label_width$}", format!("{} pairs", self.length));
        for n in &self.n_values {
            let _ = write!(out, " | {:>col$}", format!("@{n}"));
        }
        out.push('\n');
        out.push_str(&"-".repeat(label_width + self.n_values.len() * (col + 3)));
        out.push('\n');
        let cells =
            |f: &dyn Fn(usize) -> String| self.n_values.iter().map(|&n| f(n)).collect::<Vec<_>>();
        let rows = [
            ("App Review Hits", cells(&|n| self.hits[&n].to_string())),
            (
                "Acc@N (%)",
                cells(&|n| format!("{:.2}", 100.0 * self.acc[&n])),
            ),
            (
                "MRR@N (%)",
                cells(&|n| format!("{:.2}", 100.0 * self.mrr[&n])),
            ),
        ];
        for (label, row) in rows {
            let _ = write!(out, "{label:<label_width$}");
            for cell in row {
                let _ = write!(out, " | {cell:>col$}");
            }
            out.push('\n');
        }
        out
    }
}

fn check_cutoffs(n_values: &[usize]) -> Result<()> {
    if n_values.is_empty() || n_values.contains(&0) {
        return Err(Error::InvalidConfig(
            "cutoffs N must be non-empty and positive".into(),
        ));
    }
    Ok(())
}

/// Pairwise overlap of each app's Top-K frequent report words.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    pub apps: Vec<String>,
    pub k_values: Vec<usize>,
    /// `(app_x, app_y, K)` -> Overlap of X with Y.
    pub cells: BTreeMap<(String, String, usize), f64>,
}

impl OverlapMatrix {
    pub fn get(&self, x: &str, y: &str, k: usize) -> Option<f64> {
        self.cells.get(&(x.to_owned(), y.to_owned(), k)).copied()
    }

    /// One row per ordered app pair, one column per K.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("app_x,app_y");
        for k in &self.k_values {
            let _ = write!(out, ",top{k}");
        }
        out.push('\n');
        for x in &self.apps {
            for y in &self.apps {
                let _ = write!(out, "{x},{y}");
                for &k in &self.k_values {
                    let _ = write!(out, ",{:.6}", self.get(x, y, k).unwrap_or(f64::NAN));
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Overlap rates over the Top-K words of each app's report titles and bodies.
pub fn overlap_matrix(
    store: &CorpusStore,
    app_ids: &[&str],
    k_values: &[usize],
) -> Result<OverlapMatrix> {
    if k_values.is_empty() || k_values.contains(&0) {
        return Err(Error::InvalidConfig(
            "K values must be non-empty and positive".into(),
        ));
    }
    let mut stats = Vec::with_capacity(app_ids.len());
    for &app in app_ids {
        let reports = store.reports(app)?;
        if reports.is_empty() {
            return Err(Error::EmptyCorpus(format!(
                "app `{app}` has no bug reports"
            )));
        }
        stats.push(TokenStats::from_docs(reports.iter().map(|r| r.full_text())));
    }
    let mut cells = BTreeMap::new();
    for &k in k_values {
        let sets = stats
            .iter()
            .map(|s| s.top_k(k))
            .collect::<Result<Vec<_>>>()?;
        for (i, x) in sets.iter().enumerate() {
            for (j, y) in sets.iter().enumerate() {
                let rate = overlap_rate(x, y).map_err(|_| {
                    Error::EmptyCorpus(format!("app `{}` has no analysable words", app_ids[i]))
                })?;
                cells.insert((app_ids[i].to_owned(), app_ids[j].to_owned(), k), rate);
            }
        }
    }
    Ok(OverlapMatrix {
        apps: app_ids.iter().map(|s| s.to_string()).collect(),
        k_values: k_values.to_vec(),
        cells,
    })
}

/// Relevance judgement for one ground-truth pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Label {
    /// Reviews of app B judged relevant to report A; the hit rank is found by
    /// ranking.
    Relevant(HashSet<String>),
    /// Hit rank recorded by an earlier judgement (`None` for a miss).
    Ranked(Option<usize>),
}

/// Relevance labels keyed by `(report_a_id, report_b_id)`, in file order.
///
/// Each JSON line is `{"pair": [a, b], "relevant_review_ids": [...]}` or
/// `{"pair": [a, b], "hit_rank": r}` with `r` null for a miss.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelevanceLabels {
    order: Vec<(String, String)>,
    by_pair: HashMap<(String, String), Label>,
}

#[derive(Debug, Deserialize)]
struct LabelRecord {
    pair: (String, String),
    #[serde(default)]
    relevant_review_ids: Option<Vec<String>>,
    #[serde(default, deserialize_with = "present")]
    hit_rank: Option<Option<usize>>,
}

fn present<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> std::result::Result<Option<Option<usize>>, D::Error> {
    Option::<usize>::deserialize(d).map(Some)
}

impl RelevanceLabels {
    pub fn insert(&mut self, report_a: &str, report_b: &str, label: Label) {
        let key = (report_a.to_owned(), report_b.to_owned());
        if self.by_pair.insert(key.clone(), label).is_none() {
            self.order.push(key);
        }
    }

    pub fn get(&self, report_a: &str, report_b: &str) -> Option<&Label> {
        self.by_pair
            .get(&(report_a.to_owned(), report_b.to_owned()))
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Builds the hit profile directly when every label carries a hit rank.
    pub fn ranked_profile(&self) -> Result<HitProfile> {
        let mut profile = HitProfile::new(self.len())?;
        for (i, key) in self.order.iter().enumerate() {
            match &self.by_pair[key] {
                Label::Ranked(Some(rank)) => profile.record(i, *rank)?,
                Label::Ranked(None) => {}
                Label::Relevant(_) => {
                    return Err(Error::InvalidConfig(format!(
                        "pair ({}, {}) has review labels but no hit rank; pass the pairs to rank",
                        key.0, key.1
                    )))
                }
            }
        }
        Ok(profile)
    }

    pub fn from_reader(reader: impl BufRead, source: &Path) -> Result<Self> {
        let mut labels = Self::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(source, e))?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: String| Error::SchemaViolation {
                path: source.to_path_buf(),
                malformed: 1,
                total: i + 1,
                first_line: i + 1,
                first_reason: reason,
            };
            let rec: LabelRecord = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
            let label = match (rec.relevant_review_ids, rec.hit_rank) {
                (Some(ids), None) => Label::Relevant(ids.into_iter().collect()),
                (None, Some(Some(0))) => return Err(bad("hit_rank is 1-based".into())),
                (None, Some(rank)) => Label::Ranked(rank),
                _ => {
                    return Err(bad(
                        "expected exactly one of `relevant_review_ids` and `hit_rank`".into(),
                    ))
                }
            };
            labels.insert(&rec.pair.0, &rec.pair.1, label);
        }
        Ok(labels)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(std::io::BufReader::new(file), path)
    }
}

/// For each pair, ranks the B-app reviews created before report B against
/// report A's title and records the rank of the first relevant review.
/// Pairs labelled with a fixed hit rank keep it.
///
/// Returns the report and the pairs with `hit_rank` filled in.
pub fn evaluate_ground_truth(
    pairs: &[GroundTruthPair],
    store: &CorpusStore,
    matcher: &Matcher<'_>,
    labels: &RelevanceLabels,
    n_values: &[usize],
) -> Result<(EvalReport, Vec<GroundTruthPair>)> {
    if pairs.is_empty() {
        return Err(Error::EmptyCorpus("no ground-truth pairs".into()));
    }
    check_cutoffs(n_values)?;
    let depth = *n_values.iter().max().expect("non-empty");
    let mut profile = HitProfile::new(pairs.len())?;
    let mut judged = Vec::with_capacity(pairs.len());
    for (i, pair) in pairs.iter().enumerate() {
        let label = labels
            .get(&pair.report_a.report_id, &pair.report_b.report_id)
            .ok_or_else(|| {
                Error::MissingLabels(
                    pair.report_a.report_id.clone(),
                    pair.report_b.report_id.clone(),
                )
            })?;
        let hit_rank = match label {
            Label::Ranked(rank) => *rank,
            Label::Relevant(relevant) => {
                let report_a = store.report(&pair.report_a.app_id, &pair.report_a.report_id)?;
                let report_b = store.report(&pair.report_b.app_id, &pair.report_b.report_id)?;
                let opts = RankOptions {
                    top_n: depth,
                    min_similarity: None,
                    created_before: Some(report_b.created_at),
                };
                let matches = match matcher.rank_with(report_a, &report_b.app_id, opts) {
                    Ok(m) => m,
                    Err(Error::EmptyTextEmbedding) => Vec::new(),
                    Err(e) => return Err(e),
                };
                matches
                    .iter()
                    .find(|m| relevant.contains(&m.review_id))
                    .map(|m| m.rank)
            }
        };
        if let Some(rank) = hit_rank {
            profile.record(i, rank)?;
        }
        judged.push(GroundTruthPair {
            hit_rank,
            ..pair.clone()
        });
    }
    Ok((EvalReport::from_profile(&profile, n_values)?, judged))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ws(words: &[&str]) -> WordSet {
        WordSet::from_words(words.iter().copied())
    }

    #[test]
    fn overlap_examples() {
        let x = ws(&["a", "b", "c", "d"]);
        assert_eq!(overlap_rate(&x, &x).unwrap(), 1.0);
        assert_eq!(overlap_rate(&x, &ws(&["e", "f"])).unwrap(), 0.0);
        assert_eq!(overlap_rate(&x, &ws(&["b", "c", "e", "f"])).unwrap(), 0.5);
        assert!(matches!(overlap_rate(&ws(&[]), &x), Err(Error::EmptySet)));
        assert_eq!(overlap_rate(&ws(&["a"]), &ws(&[])).unwrap(), 0.0);
    }

    #[test]
    fn acc_examples() {
        let mut p = HitProfile::new(81).unwrap();
        for i in 0..21 {
            p.record(i, 1).unwrap();
        }
        assert!((acc_at_n(&p, 1) - 0.2593).abs() < 1e-4);
        let p = HitProfile::from_cumulative(81, &[21, 32, 38]).unwrap();
        assert!((acc_at_n(&p, 3) - 0.4691).abs() < 1e-4);
        assert_eq!(acc_at_n(&HitProfile::new(5).unwrap(), 3), 0.0);
    }

    #[test]
    fn mrr_examples() {
        let p = HitProfile::from_cumulative(81, &[21, 32, 38]).unwrap();
        assert!((mrr_at_n(&p, 3) - 28.5 / 81.0).abs() < 1e-12);
        assert!((mrr_at_n(&p, 3) - 0.3519).abs() < 1e-4);

        let mut p = HitProfile::new(3).unwrap();
        for (i, r) in [1, 2, 3].into_iter().enumerate() {
            p.record(i, r).unwrap();
        }
        assert!((mrr_at_n(&p, 3) - (1.0 + 0.5 + 1.0 / 3.0) / 3.0).abs() < 1e-12);
        assert!((mrr_at_n(&p, 3) - 0.6111).abs() < 1e-4);
        assert_eq!(mrr_at_n(&HitProfile::new(4).unwrap(), 10), 0.0);
    }

    #[test]
    fn profile_validation() {
        assert!(HitProfile::new(0).is_err());
        let mut p = HitProfile::new(2).unwrap();
        assert!(p.record(2, 1).is_err());
        assert!(p.record(0, 0).is_err());
        assert!(HitProfile::from_cumulative(3, &[2, 1]).is_err());
        assert!(HitProfile::from_cumulative(3, &[4]).is_err());
    }

    #[test]
    fn table_layout() {
        let p = HitProfile::from_cumulative(81, &[21, 32, 38]).unwrap();
        let table = EvalReport::from_profile(&p, &[3, 1, 2])
            .unwrap()
            .render_table();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].starts_with("81 pairs"));
        for (line, cells) in lines[2..].iter().zip([
            ["21", "32", "38"],
            ["25.93", "39.51", "46.91"],
            ["25.93", "32.72", "35.19"],
        ]) {
            let got: Vec<&str> = line.split('|').skip(1).map(str::trim).collect();
            assert_eq!(got, cells);
        }
    }

    #[test]
    fn labels_parse() {
        let data = r#"{"pair": ["f1", "b1"], "relevant_review_ids": ["r1", "r2"]}

{"pair": ["f2", "b2"], "relevant_review_ids": []}
{"pair": ["f3", "b3"], "hit_rank": 2}
{"pair": ["f4", "b4"], "hit_rank": null}"#;
        let labels = RelevanceLabels::from_reader(data.as_bytes(), Path::new("l.jsonl")).unwrap();
        assert_eq!(labels.len(), 4);
        assert!(matches!(labels.get("f1", "b1"), Some(Label::Relevant(s)) if s.len() == 2));
        assert!(matches!(labels.get("f2", "b2"), Some(Label::Relevant(s)) if s.is_empty()));
        assert_eq!(labels.get("f3", "b3"), Some(&Label::Ranked(Some(2))));
        assert_eq!(labels.get("f4", "b4"), Some(&Label::Ranked(None)));
        assert!(labels.get("f1", "b2").is_none());
        assert!(labels.ranked_profile().is_err());
        for bad in [
            "{",
            r#"{"pair": ["a", "b"]}"#,
            r#"{"pair": ["a", "b"], "hit_rank": 0}"#,
        ] {
            assert!(
                RelevanceLabels::from_reader(bad.as_bytes(), Path::new("l")).is_err(),
                "{bad}"
            );
        }
    }

    #[test]
    fn ranked_labels_profile() {
        let mut data = String::new();
        for i in 0..81 {
            let rank = match i {
                0..=20 => "1",
                21..=31 => "2",
                32..=37 => "3",
                _ => "null",
            };
            data.push_str(&format!(
                "{{\"pair\": [\"a{i}\", \"b{i}\"], \"hit_rank\": {rank}}}\n"
            ));
        }
        let labels = RelevanceLabels::from_reader(data.as_bytes(), Path::new("l")).unwrap();
        let profile = labels.ranked_profile().unwrap();
        assert_eq!(
            profile,
            HitProfile::from_cumulative(81, &[21, 32, 38]).unwrap()
        );
    }

    fn arb_profile() -> impl Strategy<Value = HitProfile> {
        (1usize..60)
            .prop_flat_map(|len| {
                (
                    Just(len),
                    proptest::collection::vec(proptest::option::of(1usize..12), len),
                )
            })
            .prop_map(|(len, ranks)| {
                let mut p = HitProfile::new(len).unwrap();
                for (i, r) in ranks.into_iter().enumerate() {
                    if let Some(r) = r {
                        p.record(i, r).unwrap();
                    }
                }
                p
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn report_invariants(p in arb_profile()) {
            let ns: Vec<usize> = (1..=12).collect();
            let r = EvalReport::from_profile(&p, &ns).unwrap();
            for w in ns.windows(2) {
                prop_assert!(r.acc[&w[0]] <= r.acc[&w[1]]);
                prop_assert!(r.mrr[&w[0]] <= r.mrr[&w[1]]);
            }
            for n in &ns {
                prop_assert!(r.mrr[n] <= r.acc[n] + 1e-15);
                prop_assert!((0.0..=1.0).contains(&r.acc[n]));
            }
            prop_assert_eq!(r.mrr[&1], r.acc[&1]);
        }

        #[test]
        fn overlap_equal_size_symmetry(
            universe in proptest::collection::hash_set("[a-h]{1,2}", 2..40),
            k in 1usize..20,
            seed in any::<u64>(),
        ) {
            use rand::{seq::SliceRandom, SeedableRng};
            let words: Vec<String> = universe.into_iter().collect();
            let k = k.min(words.len());
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<&String> = words.choose_multiple(&mut rng, k).collect();
            let y: Vec<&String> = words.choose_multiple(&mut rng, k).collect();
            let (x, y) = (WordSet::from_words(x.into_iter().cloned()), WordSet::from_words(y.into_iter().cloned()));
            let xy = overlap_rate(&x, &y).unwrap();
            prop_assert_eq!(xy, overlap_rate(&y, &x).unwrap());
            prop_assert!((0.0..=1.0).contains(&xy));
        }
    }
}
