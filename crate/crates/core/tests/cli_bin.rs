//! Exercises the installed binary the way a shell user would: real argv,
//! real exit codes, real files. The top-level help text is pinned to a
//! committed transcript so flag renames and wording changes show up in
//! review rather than in users' scripts.

use std::path::Path;
use std::process::{Command, Output};

fn phishcorr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phishcorr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn help_matches_the_committed_transcript() {
    let out = phishcorr(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let expected = include_str!("fixtures/help.txt");
    assert_eq!(
        stdout(&out),
        expected,
        "top-level help drifted from tests/fixtures/help.txt; update the fixture deliberately"
    );
}

#[test]
fn version_prints_and_exits_clean() {
    let out = phishcorr(&["--version"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn exit_codes_separate_usage_data_and_success() {
    assert_eq!(phishcorr(&[]).status.code(), Some(1), "no arguments is a usage error");
    assert_eq!(
        phishcorr(&["train", "--bogus-flag"]).status.code(),
        Some(1),
        "unknown flags are usage errors"
    );
    let dir = tempfile::tempdir().unwrap();
    let missing_store = dir.path().join("empty-store");
    let out = phishcorr(&[
        "fetch",
        "--store",
        missing_store.to_str().unwrap(),
        "https://never-recorded.example/",
    ]);
    assert_eq!(out.status.code(), Some(2), "replaying an unrecorded URL is a data error");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("evidence:"), "data errors name their module: {stderr}");
}

#[test]
fn full_pipeline_runs_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_owned();
    let store = path("store");
    let csv = path("features.csv");
    let holdout = path("holdout.csv");
    let model = path("model.json");
    let report = path("report.json");

    let ok = |args: &[&str]| {
        let out = phishcorr(args);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        out
    };

    ok(&["synth", "--store", &store, "--seed", "21", "--benign", "40", "--phish", "40"]);
    ok(&["extract", "--store", &store, "--out", &csv]);
    ok(&[
        "train", "--data", &csv, "--out", &model, "--train-fraction", "0.8", "--holdout-out",
        &holdout,
    ]);
    let eval = ok(&["evaluate", "--model", &model, "--data", &holdout, "--out", &report]);
    let eval_text = stdout(&eval);
    assert!(eval_text.contains("accuracy"), "evaluate prints the metric table: {eval_text}");
    assert!(Path::new(&report).is_file());

    // score one recorded page by key
    let keys = phishcorr::evidence::store::ReplayStore::open(&store).keys().unwrap();
    let predict = ok(&["predict", "--model", &model, "--store", &store, "--key", &keys[0]]);
    let line = stdout(&predict);
    assert!(
        line.starts_with("benign p=") || line.starts_with("phishing p="),
        "prediction line was {line:?}"
    );

    let analyze = ok(&["analyze", "--data", &csv]);
    assert!(stdout(&analyze).contains("strongest label correlates"));

    // every file output got a manifest sibling
    assert!(Path::new(&store).join("manifest.json").is_file());
    assert!(dir.path().join("features.csv.manifest.json").is_file());
    assert!(dir.path().join("model.json.manifest.json").is_file());
    assert!(dir.path().join("report.json.manifest.json").is_file());
}
