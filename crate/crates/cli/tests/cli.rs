use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn revrec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_revrec"))
        .args(args)
        .env_remove("REVREC_STORE")
        .env_remove("REVREC_ENDPOINT")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = revrec(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fixture_store(dir: &Path) -> String {
    let store = dir.join("store");
    let store = store.to_str().unwrap();
    let f = fixtures();
    for (app, name) in [("firefox", "Firefox"), ("brave", "Brave")] {
        ok(&[
            "ingest",
            "--store",
            store,
            "--app",
            app,
            "--name",
            name,
            "--category",
            "browser",
            "--reports",
            f.join(format!("{app}_reports.jsonl")).to_str().unwrap(),
            "--reviews",
            f.join(format!("{app}_reviews.jsonl")).to_str().unwrap(),
        ]);
    }
    store.to_owned()
}

fn body(jsonl: &str) -> &str {
    let (first, rest) = jsonl.split_once('\n').unwrap();
    assert!(first.starts_with("{\"manifest\""), "{first}");
    rest
}

#[test]
fn recommend_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let store = fixture_store(dir.path());
    let golden =
        std::fs::read_to_string(fixtures().join("golden_recommend_firefox_brave.jsonl")).unwrap();
    let args = [
        "recommend",
        "--store",
        &store,
        "--source-app",
        "firefox",
        "--target-app",
        "brave",
        "--threshold",
        "0.9",
        "--top-n",
        "3",
    ];
    let first = ok(&args);
    assert_eq!(body(&first), golden);
    for threads in ["1", "4"] {
        let mut a = args.to_vec();
        a.extend(["--threads", threads]);
        assert_eq!(ok(&a), first);
    }
    let mut a = args.to_vec();
    a.push("--no-cache");
    assert_eq!(ok(&a), first);
}

#[test]
fn out_flag_and_env_store() {
    let dir = tempfile::tempdir().unwrap();
    let store = fixture_store(dir.path());
    let out = dir.path().join("rec.jsonl");
    let status = Command::new(env!("CARGO_BIN_EXE_revrec"))
        .args([
            "recommend",
            "--source-app",
            "firefox",
            "--target-app",
            "brave",
            "--out",
        ])
        .arg(&out)
        .env("REVREC_STORE", &store)
        .status()
        .unwrap();
    assert!(status.success());
    let written = std::fs::read_to_string(&out).unwrap();
    assert_eq!(written.lines().count(), 13);
}

#[test]
fn eval_reproduces_hit_profile_table() {
    let labels = fixtures().join("hit_profile_labels.jsonl");
    let out = ok(&[
        "eval",
        "--labels",
        labels.to_str().unwrap(),
        "--n",
        "1",
        "--n",
        "2",
        "--n",
        "3",
    ]);
    let row = |name: &str| -> Vec<String> {
        let line = out.lines().find(|l| l.starts_with(name)).unwrap();
        line.split('|')
            .skip(1)
            .map(|c| c.trim().to_owned())
            .collect()
    };
    assert_eq!(row("Acc@N"), ["25.93", "39.51", "46.91"]);
    assert_eq!(row("MRR@N"), ["25.93", "32.72", "35.19"]);
    assert_eq!(row("App Review Hits"), ["21", "32", "38"]);
}

#[test]
fn eval_ranks_ground_truth_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let store = fixture_store(dir.path());
    let pairs = dir.path().join("pairs.jsonl");
    ok(&[
        "ground-truth",
        "--store",
        &store,
        "--source-app",
        "firefox",
        "--target-app",
        "brave",
        "--out",
        pairs.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&pairs).unwrap();
    assert_eq!(body(&text).lines().count(), 2);

    let labels = dir.path().join("labels.jsonl");
    std::fs::write(
        &labels,
        "{\"pair\": [\"ff-102\", \"br-1\"], \"relevant_review_ids\": [\"br-r004\"]}\n\
         {\"pair\": [\"ff-105\", \"br-2\"], \"relevant_review_ids\": []}\n",
    )
    .unwrap();
    let out = ok(&[
        "eval",
        "--store",
        &store,
        "--labels",
        labels.to_str().unwrap(),
        "--pairs",
        pairs.to_str().unwrap(),
    ]);
    // Every fixture review postdates the brave reports, so nothing precedes them.
    assert!(out.lines().any(|l| l.starts_with("2 pairs")), "{out}");
    assert!(
        out.lines()
            .any(|l| l.starts_with("Acc@N") && l.ends_with("0.00")),
        "{out}"
    );

    std::fs::write(
        &labels,
        "{\"pair\": [\"ff-102\", \"br-1\"], \"relevant_review_ids\": []}\n",
    )
    .unwrap();
    let missing = revrec(&[
        "eval",
        "--store",
        &store,
        "--labels",
        labels.to_str().unwrap(),
        "--pairs",
        pairs.to_str().unwrap(),
    ]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn overlap_of_app_with_itself_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    let store = store.to_str().unwrap();
    ok(&[
        "ingest",
        "--store",
        store,
        "--app",
        "firefox",
        "--category",
        "browser",
        "--reports",
        fixtures().join("firefox_reports.jsonl").to_str().unwrap(),
    ]);
    let csv = ok(&["overlap", "--store", store, "--k", "100"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# {\"manifest\""));
    assert_eq!(lines[1], "app_x,app_y,top100");
    assert_eq!(lines[2], "firefox,firefox,1.000000");
}

#[test]
fn stats_lists_frequent_words() {
    let dir = tempfile::tempdir().unwrap();
    let store = fixture_store(dir.path());
    let out = ok(&["stats", "--store", &store, "--min-freq", "20"]);
    let firefox: serde_json::Value = serde_json::from_str(
        body(&out)
            .lines()
            .find(|l| l.contains("\"firefox\""))
            .unwrap(),
    )
    .unwrap();
    assert_eq!(firefox["reports"], 13);
    assert_eq!(firefox["reviews"], 70);
    let words: Vec<&str> = firefox["frequent_words"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e[0].as_str().unwrap())
        .collect();
    assert_eq!(words, ["respond", "stop"]);
}

#[test]
fn embed_fills_cache_and_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let store = fixture_store(dir.path());
    let first = ok(&["embed", "--store", &store]);
    assert!(Path::new(&store).join("embeddings.cache").exists());
    assert_eq!(ok(&["embed", "--store", &store]), first);
    assert!(body(&first).contains("\"reviews_embedded\":112"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nothing");
    let missing = missing.to_str().unwrap();
    let rec = |extra: &[&str]| {
        let mut a = vec![
            "recommend",
            "--source-app",
            "firefox",
            "--target-app",
            "brave",
        ];
        a.extend_from_slice(extra);
        revrec(&a).status.code()
    };
    assert_eq!(rec(&["--store", missing]), Some(2));
    assert_eq!(revrec(&["recommend"]).status.code(), Some(1));
    assert_eq!(revrec(&["frobnicate"]).status.code(), Some(1));

    let store = fixture_store(dir.path());
    assert_eq!(rec(&["--store", &store, "--threshold", "1.5"]), Some(1));
    assert_eq!(rec(&["--store", &store, "--top-n", "0"]), Some(1));
    assert_eq!(rec(&["--store", &store, "--embedder", "sidecar"]), Some(1));
    assert_eq!(
        rec(&[
            "--store",
            &store,
            "--embedder",
            "sidecar",
            "--endpoint",
            "127.0.0.1:1",
            "--no-cache"
        ]),
        Some(3)
    );
    let bad = revrec(&[
        "recommend",
        "--store",
        &store,
        "--source-app",
        "opera",
        "--target-app",
        "brave",
    ]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("opera"));

    let junk = dir.path().join("junk.jsonl");
    std::fs::write(&junk, "not json\n{}\n").unwrap();
    let out = revrec(&[
        "ingest",
        "--store",
        &store,
        "--app",
        "brave",
        "--reports",
        junk.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("junk.jsonl"));
}

#[test]
fn help_lists_defaults() {
    let help = ok(&["recommend", "--help"]);
    for flag in [
        "--store",
        "--embedder",
        "--dim",
        "--endpoint",
        "--threshold",
        "--gt-threshold",
        "--dup-threshold",
        "--top-n",
        "--seed",
        "--out",
    ] {
        assert!(help.contains(flag), "{flag} missing from help");
    }
    for default in [
        "[default: 0.9]",
        "[default: 0.91]",
        "[default: 3]",
        "[default: 256]",
        "[default: 42]",
    ] {
        assert!(help.contains(default), "{default} missing from help");
    }
    let eval = ok(&["eval", "--help"]);
    assert!(
        eval.contains("--labels") && eval.contains("[default: 1 2 3]"),
        "{eval}"
    );
    let overlap = ok(&["overlap", "--help"]);
    assert!(
        overlap.contains("[default: 100 200 300 400 500 600 700 800 900 1000]"),
        "{overlap}"
    );
}

#[test]
fn fixture_is_in_sync_with_generator() {
    let Ok(status) = Command::new("python3")
        .arg(fixtures().join("make_fixture.py"))
        .arg("--check")
        .status()
    else {
        eprintln!("python3 not found; generator check skipped");
        return;
    };
    assert!(status.success());
}
