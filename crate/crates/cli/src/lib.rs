//! The `revrec` command-line pipeline: ingest, embed, recommend,
//! ground-truth, eval, overlap and stats.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use revrec_core::corpus::{AppDescriptor, CorpusStore};
use revrec_core::embedding::{Backend, EmbedderConfig, EmbeddingService};
use revrec_core::matcher::{
    lead_time_stats, EmbeddingTable, GroundTruthPair, MatchConfig, Matcher,
};
use revrec_core::metrics::{evaluate_ground_truth, overlap_matrix, EvalReport, RelevanceLabels};
use revrec_core::textprep::TokenStats;
use revrec_core::Error;

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;

const CACHE_FILE: &str = "embeddings.cache";

#[derive(Debug, Parser)]
#[command(
    name = "revrec",
    version,
    about = "Recommend bug reports across same-category apps by matching them against app reviews"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Import bug reports and/or reviews of one app into the store.
    Ingest(IngestArgs),
    /// Embed every report title and review, filling the embedding cache.
    Embed(EmbedArgs),
    /// Recommend the source app's reports to the target app.
    Recommend(RecommendArgs),
    /// Pair reports of two apps whose titles are near-identical.
    GroundTruth(PairArgs),
    /// Acc@N / MRR@N over labelled ground-truth pairs.
    Eval(EvalArgs),
    /// Overlap rates of the apps' Top-K frequent report words, as CSV.
    Overlap(OverlapArgs),
    /// Per-app corpus statistics and frequent words.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Args)]
pub struct StoreArgs {
    /// Store directory.
    #[arg(long, env = "REVREC_STORE", default_value = "revrec-store")]
    pub store: PathBuf,

    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EmbedOpts {
    /// Embedding backend.
    #[arg(long, default_value = "hash", value_parser = ["hash", "sidecar"])]
    pub embedder: String,

    /// Vector dimension (produced by the hash backend, expected from the sidecar).
    #[arg(long, default_value_t = 256)]
    pub dim: usize,

    /// Sidecar address: `host:port` or `stdio:<command>`.
    #[arg(long, env = "REVREC_ENDPOINT")]
    pub endpoint: Option<String>,

    /// Hash-embedder seed.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Embedding cache file [default: <store>/embeddings.cache].
    #[arg(long)]
    pub cache: Option<PathBuf>,

    /// Do not read or write the embedding cache.
    #[arg(long)]
    pub no_cache: bool,

    /// Scan worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Clone, Args)]
pub struct MatchOpts {
    /// Minimum review similarity for a recommendation.
    #[arg(long, default_value_t = 0.9)]
    pub threshold: f64,

    /// Minimum title similarity for a ground-truth pair.
    #[arg(long = "gt-threshold", default_value_t = 0.91)]
    pub gt_threshold: f64,

    /// Title similarity at which the target already tracks the bug.
    #[arg(long = "dup-threshold", default_value_t = 0.91)]
    pub dup_threshold: f64,

    /// Reviews listed per recommendation.
    #[arg(long = "top-n", default_value_t = 3)]
    pub top_n: usize,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub store: StoreArgs,

    /// App id the records belong to.
    #[arg(long)]
    pub app: String,

    /// Display name, used when the app is new [default: the app id].
    #[arg(long)]
    pub name: Option<String>,

    /// App category, required when the app is new.
    #[arg(long)]
    pub category: Option<String>,

    /// Issue tracker location, recorded when the app is new.
    #[arg(long)]
    pub repo: Option<String>,

    /// Bug reports, JSON Lines.
    #[arg(long)]
    pub reports: Option<PathBuf>,

    /// App reviews, JSON Lines.
    #[arg(long)]
    pub reviews: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub store: StoreArgs,
    #[command(flatten)]
    pub embed: EmbedOpts,

    /// Apps to embed [default: all].
    #[arg(long = "app")]
    pub apps: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    #[command(flatten)]
    pub pair: PairArgs,

    /// Also report lead times measured at this instant (RFC 3339).
    #[arg(long = "run-date")]
    pub run_date: Option<DateTime<Utc>>,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    #[command(flatten)]
    pub store: StoreArgs,
    #[command(flatten)]
    pub embed: EmbedOpts,
    #[command(flatten)]
    pub matching: MatchOpts,

    #[arg(long = "source-app")]
    pub source_app: String,

    #[arg(long = "target-app")]
    pub target_app: String,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub store: StoreArgs,
    #[command(flatten)]
    pub embed: EmbedOpts,
    #[command(flatten)]
    pub matching: MatchOpts,

    /// Relevance labels, JSON Lines.
    #[arg(long)]
    pub labels: PathBuf,

    /// Ground-truth pairs to rank (output of `ground-truth`). Without it
    /// every label must carry a hit rank.
    #[arg(long)]
    pub pairs: Option<PathBuf>,

    /// Cutoff N (repeatable).
    #[arg(long = "n", default_values_t = [1, 2, 3])]
    pub n_values: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct OverlapArgs {
    #[command(flatten)]
    pub store: StoreArgs,

    /// K (repeatable).
    #[arg(long = "k", default_values_t = [100, 200, 300, 400, 500, 600, 700, 800, 900, 1000])]
    pub k_values: Vec<usize>,

    /// Apps to compare [default: all].
    #[arg(long = "app")]
    pub apps: Vec<String>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub store: StoreArgs,

    /// Words at least this frequent are listed.
    #[arg(long = "min-freq", default_value_t = 20)]
    pub min_freq: u64,
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_) | Error::UnknownApp(_) | Error::InvalidApp(_) => EXIT_CONFIG,
        Error::SidecarUnavailable { .. } | Error::DimensionMismatch { .. } => EXIT_BACKEND,
        Error::AtIndex { source, .. } => exit_code(source),
        _ => EXIT_DATA,
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

/// Settings that determine an output, hashed into the manifest line.
#[derive(Debug, Serialize)]
struct RunConfig<'a> {
    command: &'a str,
    embedder: Option<EmbedderSettings<'a>>,
    #[serde(rename = "match")]
    matching: Option<&'a MatchConfig>,
    n_values: Option<&'a [usize]>,
    k_values: Option<&'a [usize]>,
    extra: serde_json::Value,
}

#[derive(Debug, Serialize)]
struct EmbedderSettings<'a> {
    backend: &'a str,
    dim: usize,
    seed: u64,
}

impl RunConfig<'_> {
    fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(&Sha256::digest(&json)[..8])
    }

    fn manifest(&self, seed: Option<u64>) -> serde_json::Value {
        serde_json::json!({
            "manifest": {
                "tool": "revrec",
                "version": env!("CARGO_PKG_VERSION"),
                "command": self.command,
                "config_hash": self.hash(),
                "seed": seed,
            }
        })
    }
}

/// Output sink: a file or standard output.
struct Output {
    inner: Box<dyn Write>,
    path: Option<PathBuf>,
}

impl Output {
    fn open(path: Option<&Path>) -> CliResult<Self> {
        let inner: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).map_err(|e| CliError::from(io_error(p, e)))?,
            )),
            None => Box::new(BufWriter::new(std::io::stdout())),
        };
        Ok(Self {
            inner,
            path: path.map(Path::to_path_buf),
        })
    }

    fn fail(&self, e: std::io::Error) -> CliError {
        io_error(self.path.as_deref().unwrap_or(Path::new("<stdout>")), e).into()
    }

    fn line(&mut self, text: &str) -> CliResult {
        writeln!(self.inner, "{text}").map_err(|e| self.fail(e))
    }

    fn json<T: Serialize>(&mut self, value: &T) -> CliResult {
        let text = serde_json::to_string(value).expect("output serializes");
        self.line(&text)
    }

    fn finish(mut self) -> CliResult {
        self.inner.flush().map_err(|e| self.fail(e))
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn execute(command: Command) -> CliResult {
    match command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Embed(a) => cmd_embed(a),
        Command::Recommend(a) => cmd_recommend(a),
        Command::GroundTruth(a) => cmd_ground_truth(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Overlap(a) => cmd_overlap(a),
        Command::Stats(a) => cmd_stats(a),
    }
}

fn store_exists(dir: &Path) -> bool {
    dir.join("manifest.json").exists()
}

fn load_store(dir: &Path) -> CliResult<CorpusStore> {
    if !store_exists(dir) {
        return Err(CliError {
            code: EXIT_DATA,
            message: format!(
                "{}: no store here (run `revrec ingest` first)",
                dir.display()
            ),
        });
    }
    Ok(CorpusStore::load(dir)?)
}

pub fn cmd_ingest(a: IngestArgs) -> CliResult {
    if a.reports.is_none() && a.reviews.is_none() {
        return Err(CliError::config(
            "nothing to ingest: pass --reports and/or --reviews",
        ));
    }
    let dir = &a.store.store;
    let mut store = if store_exists(dir) {
        CorpusStore::load(dir)?
    } else {
        CorpusStore::new()
    };
    if store.app(&a.app).is_err() {
        let category = a.category.as_deref().ok_or_else(|| {
            CliError::config(format!("app `{}` is new: --category is required", a.app))
        })?;
        let mut app = AppDescriptor::new(&a.app, a.name.as_deref().unwrap_or(&a.app), category);
        app.repo = a.repo.clone();
        store.register_app(app)?;
    }

    let mut summaries = Vec::new();
    for (kind, path) in [("reports", &a.reports), ("reviews", &a.reviews)] {
        let Some(path) = path else { continue };
        let summary = if kind == "reports" {
            store.ingest_reports(path, &a.app)?
        } else {
            store.ingest_reviews(path, &a.app)?
        };
        for w in &summary.warnings {
            eprintln!("warning: {}: {w}", path.display());
        }
        eprintln!(
            "{}: {kind}: {} accepted, {} malformed, {} already present, {} too short, {} too long, {} duplicate text",
            a.app,
            summary.accepted,
            summary.malformed,
            summary.already_present,
            summary.too_short,
            summary.too_long,
            summary.duplicate_text
        );
        summaries.push(serde_json::json!({ "app_id": a.app, "kind": kind, "summary": summary }));
    }
    store.save(dir)?;

    if a.store.out.is_some() {
        let cfg = RunConfig {
            command: "ingest",
            embedder: None,
            matching: None,
            n_values: None,
            k_values: None,
            extra: serde_json::json!({ "app": a.app }),
        };
        let mut out = Output::open(a.store.out.as_deref())?;
        out.json(&cfg.manifest(None))?;
        for s in &summaries {
            out.json(s)?;
        }
        out.finish()?;
    }
    Ok(())
}

fn embedder_config(store: &Path, o: &EmbedOpts) -> CliResult<EmbedderConfig> {
    let backend: Backend = o.embedder.parse()?;
    let cfg = EmbedderConfig {
        backend,
        dim: o.dim,
        endpoint: o.endpoint.clone(),
        cache_path: (!o.no_cache)
            .then(|| o.cache.clone().unwrap_or_else(|| store.join(CACHE_FILE))),
        seed: o.seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn embedder_settings(o: &EmbedOpts) -> EmbedderSettings<'_> {
    EmbedderSettings {
        backend: &o.embedder,
        dim: o.dim,
        seed: o.seed,
    }
}

fn match_config(o: &MatchOpts) -> CliResult<MatchConfig> {
    let cfg = MatchConfig {
        recommend_threshold: o.threshold,
        ground_truth_threshold: o.gt_threshold,
        duplicate_threshold: o.dup_threshold,
        top_n: o.top_n,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn build_table(
    store: &CorpusStore,
    cfg: &EmbedderConfig,
    apps: &[&str],
) -> CliResult<EmbeddingTable> {
    let mut service = EmbeddingService::from_config(cfg)?;
    let table = EmbeddingTable::build_for(store, &mut service, apps)?;
    if table.skipped_reports + table.skipped_reviews > 0 {
        eprintln!(
            "skipped {} report titles and {} reviews with nothing to embed",
            table.skipped_reports, table.skipped_reviews
        );
    }
    Ok(table)
}

fn matcher<'a>(
    store: &'a CorpusStore,
    table: &'a EmbeddingTable,
    cfg: MatchConfig,
    threads: usize,
) -> CliResult<Matcher<'a>> {
    let threads = if threads == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        threads
    };
    Ok(Matcher::new(store, table, cfg).with_threads(threads)?)
}

fn selected_apps(store: &CorpusStore, apps: &[String]) -> CliResult<Vec<String>> {
    if apps.is_empty() {
        return Ok(store.app_ids());
    }
    for app in apps {
        store.app(app)?;
    }
    Ok(apps.to_vec())
}

pub fn cmd_embed(a: EmbedArgs) -> CliResult {
    let store = load_store(&a.store.store)?;
    let cfg = embedder_config(&a.store.store, &a.embed)?;
    let apps = selected_apps(&store, &a.apps)?;
    let refs: Vec<&str> = apps.iter().map(String::as_str).collect();
    let mut service = EmbeddingService::from_config(&cfg)?;
    let table = EmbeddingTable::build_for(&store, &mut service, &refs)?;

    let run = RunConfig {
        command: "embed",
        embedder: Some(embedder_settings(&a.embed)),
        matching: None,
        n_values: None,
        k_values: None,
        extra: serde_json::json!({ "apps": apps }),
    };
    let mut out = Output::open(a.store.out.as_deref())?;
    out.json(&run.manifest(Some(a.embed.seed)))?;
    for app in &apps {
        let reports = table.reports(app)?.len();
        let reviews = table.reviews(app)?.len();
        eprintln!("{app}: {reports} report titles, {reviews} reviews embedded");
        out.json(&serde_json::json!({
            "app_id": app,
            "reports_embedded": reports,
            "reviews_embedded": reviews,
        }))?;
    }
    eprintln!(
        "backend {} dim {}: {} backend calls, {} skipped",
        service.backend_id(),
        service.dim(),
        service.backend_calls(),
        table.skipped_reports + table.skipped_reviews
    );
    out.finish()
}

pub fn cmd_recommend(a: RecommendArgs) -> CliResult {
    let p = &a.pair;
    let store = load_store(&p.store.store)?;
    let ecfg = embedder_config(&p.store.store, &p.embed)?;
    let mcfg = match_config(&p.matching)?;
    store.app(&p.source_app)?;
    store.app(&p.target_app)?;
    let table = build_table(&store, &ecfg, &[&p.source_app, &p.target_app])?;
    let m = matcher(&store, &table, mcfg.clone(), p.embed.threads)?;
    let (recs, skipped) = m.recommend_all(&p.source_app, &p.target_app)?;

    let run = RunConfig {
        command: "recommend",
        embedder: Some(embedder_settings(&p.embed)),
        matching: Some(&mcfg),
        n_values: None,
        k_values: None,
        extra: serde_json::json!({ "source_app": p.source_app, "target_app": p.target_app }),
    };
    let mut out = Output::open(p.store.out.as_deref())?;
    out.json(&run.manifest(Some(p.embed.seed)))?;
    for r in &recs {
        out.json(r)?;
    }
    out.finish()?;

    let decided = recs.iter().filter(|r| r.decided).count();
    let duplicates = recs.iter().filter(|r| r.duplicate_of.is_some()).count();
    eprintln!(
        "{} -> {}: {} reports, {decided} recommended, {duplicates} already tracked, {skipped} skipped",
        p.source_app,
        p.target_app,
        recs.len()
    );
    if let Some(run_date) = a.run_date {
        match lead_time_stats(&recs, run_date) {
            Ok(stats) => eprintln!(
                "lead time: mean {:.1} days, median {:.1} days over {} recommendations",
                stats.mean_days,
                stats.median_days,
                stats.items.len()
            ),
            Err(Error::NoDecidedRecommendations) => eprintln!("lead time: no recommendations"),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

pub fn cmd_ground_truth(p: PairArgs) -> CliResult {
    let store = load_store(&p.store.store)?;
    let ecfg = embedder_config(&p.store.store, &p.embed)?;
    let mcfg = match_config(&p.matching)?;
    let table = build_table(&store, &ecfg, &[&p.source_app, &p.target_app])?;
    let m = matcher(&store, &table, mcfg.clone(), p.embed.threads)?;
    let truth =
        m.build_ground_truth(store.reports(&p.source_app)?, store.reports(&p.target_app)?)?;

    let run = RunConfig {
        command: "ground-truth",
        embedder: Some(embedder_settings(&p.embed)),
        matching: Some(&mcfg),
        n_values: None,
        k_values: None,
        extra: serde_json::json!({ "source_app": p.source_app, "target_app": p.target_app }),
    };
    let mut out = Output::open(p.store.out.as_deref())?;
    out.json(&run.manifest(Some(p.embed.seed)))?;
    for pair in &truth.pairs {
        out.json(pair)?;
    }
    out.finish()?;
    eprintln!(
        "{} -> {}: {} pairs, {} titles skipped",
        p.source_app,
        p.target_app,
        truth.pairs.len(),
        truth.skipped
    );
    Ok(())
}

fn read_pairs(path: &Path) -> CliResult<Vec<GroundTruthPair>> {
    let file = File::open(path).map_err(|e| CliError::from(io_error(path, e)))?;
    let mut pairs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::from(io_error(path, e)))?;
        if line.trim().is_empty() || line.starts_with("{\"manifest\"") {
            continue;
        }
        let pair = serde_json::from_str(&line).map_err(|e| CliError {
            code: EXIT_DATA,
            message: format!("{}: line {}: {e}", path.display(), i + 1),
        })?;
        pairs.push(pair);
    }
    Ok(pairs)
}

pub fn cmd_eval(a: EvalArgs) -> CliResult {
    let labels = RelevanceLabels::load(&a.labels)?;
    let mcfg = match_config(&a.matching)?;
    let (report, judged) = match &a.pairs {
        None => {
            let profile = labels.ranked_profile()?;
            (EvalReport::from_profile(&profile, &a.n_values)?, Vec::new())
        }
        Some(path) => {
            let pairs = read_pairs(path)?;
            let store = load_store(&a.store.store)?;
            let ecfg = embedder_config(&a.store.store, &a.embed)?;
            let mut apps: Vec<&str> = pairs
                .iter()
                .flat_map(|p| [p.report_a.app_id.as_str(), p.report_b.app_id.as_str()])
                .collect();
            apps.sort_unstable();
            apps.dedup();
            let table = build_table(&store, &ecfg, &apps)?;
            let m = matcher(&store, &table, mcfg.clone(), a.embed.threads)?;
            evaluate_ground_truth(&pairs, &store, &m, &labels, &a.n_values)?
        }
    };

    let run = RunConfig {
        command: "eval",
        embedder: a.pairs.as_ref().map(|_| embedder_settings(&a.embed)),
        matching: Some(&mcfg),
        n_values: Some(&a.n_values),
        k_values: None,
        extra: serde_json::Value::Null,
    };
    let mut out = Output::open(a.store.out.as_deref())?;
    out.line(&format!("# {}", run.manifest(Some(a.embed.seed))))?;
    out.line(report.render_table().trim_end())?;
    out.finish()?;
    for pair in &judged {
        if pair.hit_rank.is_none() {
            eprintln!(
                "miss: ({}, {})",
                pair.report_a.report_id, pair.report_b.report_id
            );
        }
    }
    eprintln!("{} pairs evaluated", report.length);
    Ok(())
}

pub fn cmd_overlap(a: OverlapArgs) -> CliResult {
    let store = load_store(&a.store.store)?;
    let apps = selected_apps(&store, &a.apps)?;
    let refs: Vec<&str> = apps.iter().map(String::as_str).collect();
    let matrix = overlap_matrix(&store, &refs, &a.k_values)?;
    let run = RunConfig {
        command: "overlap",
        embedder: None,
        matching: None,
        n_values: None,
        k_values: Some(&a.k_values),
        extra: serde_json::json!({ "apps": apps }),
    };
    let mut out = Output::open(a.store.out.as_deref())?;
    out.line(&format!("# {}", run.manifest(None)))?;
    out.line(matrix.to_csv().trim_end())?;
    out.finish()?;
    eprintln!("{} apps, {} K values", apps.len(), a.k_values.len());
    Ok(())
}

pub fn cmd_stats(a: StatsArgs) -> CliResult {
    if a.min_freq == 0 {
        return Err(CliError::config("--min-freq must be at least 1"));
    }
    let store = load_store(&a.store.store)?;
    let run = RunConfig {
        command: "stats",
        embedder: None,
        matching: None,
        n_values: None,
        k_values: None,
        extra: serde_json::json!({ "min_freq": a.min_freq }),
    };
    let mut out = Output::open(a.store.out.as_deref())?;
    out.json(&run.manifest(None))?;
    for app in store.apps() {
        let reports = store.reports(&app.app_id)?;
        let reviews = store.reviews(&app.app_id)?;
        let stats = TokenStats::from_docs(reports.iter().map(|r| r.full_text()));
        let frequent = stats.above(a.min_freq)?;
        out.json(&serde_json::json!({
            "app_id": app.app_id,
            "name": app.name,
            "category": app.category,
            "reports": reports.len(),
            "reviews": reviews.len(),
            "report_tokens": stats.total_tokens,
            "vocabulary": stats.vocabulary_size(),
            "frequent_words": frequent.entries,
        }))?;
        eprintln!(
            "{}: {} reports, {} reviews, {} distinct stems, {} at least {} times",
            app.app_id,
            reports.len(),
            reviews.len(),
            stats.vocabulary_size(),
            frequent.len(),
            a.min_freq
        );
    }
    out.finish()
}
