//! End-to-end checks of the `bugbrief` binary: subcommand wiring and exit
//! codes (0 success, 1 usage, 2 runtime).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(path: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(path)
}

fn bugbrief(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bugbrief")).args(args).output().expect("binary runs")
}

#[test]
fn summarize_single_instance_prints_summary() {
    let out = bugbrief(&[
        "summarize",
        "--corpus",
        fixture("fixture5.jsonl").to_str().unwrap(),
        "--bug-id",
        "demo-001",
        "--condition",
        "report_only",
        "--strategy",
        "zero",
        "--provider",
        "mock",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("trim helper"), "unexpected summary: {stdout}");
}

#[test]
fn bench_rejects_duplicate_cell_labels() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = serde_json::json!({
        "corpus": fixture("fixture5.jsonl"),
        "output_dir": dir.path().join("out"),
        "cells": [
            {"label": "same", "strategy": "zero", "condition": "report_only",
             "ordering": "report_first", "provider": "mock"},
            {"label": "same", "strategy": "zero", "condition": "code_only",
             "ordering": "report_first", "provider": "mock"},
        ],
        "metrics": ["rouge1"],
    });
    let path = dir.path().join("matrix.json");
    fs::write(&path, serde_json::to_string(&matrix).unwrap()).unwrap();

    let out = bugbrief(&["bench", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("duplicate cell label"));
}

#[test]
fn evaluate_writes_metrics_csv() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().join("results.jsonl");
    let out = bugbrief(&[
        "summarize",
        "--corpus",
        fixture("fixture5.jsonl").to_str().unwrap(),
        "--condition",
        "report_only",
        "--strategy",
        "zero",
        "--provider",
        "mock",
        "--out",
        results.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let csv_path = dir.path().join("metrics.csv");
    let out = bugbrief(&[
        "evaluate",
        "--results",
        results.to_str().unwrap(),
        "--corpus",
        fixture("fixture5.jsonl").to_str().unwrap(),
        "--out-csv",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(&csv_path).unwrap();
    assert!(csv.lines().count() == 7, "header + 5 instances + CORPUS");
    assert!(csv.lines().last().unwrap().starts_with("CORPUS,"));
}

#[test]
fn export_finetune_reports_split_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("ft.jsonl");
    let out = bugbrief(&[
        "export-finetune",
        "--corpus",
        fixture("finetune10.jsonl").to_str().unwrap(),
        "--variant",
        "br",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("9 train / 1 valid"));
    assert_eq!(fs::read_to_string(&out_path).unwrap().lines().count(), 10);
}

#[test]
fn ingest_defects4j_layout_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("bugs");
    let bug = root.join("proj-1");
    fs::create_dir_all(bug.join("buggy")).unwrap();
    fs::write(bug.join("report.html"), "<p>Widget fails to widget.</p>").unwrap();
    fs::write(bug.join("buggy/Widget.src"), "void widget() { fail(); }").unwrap();
    fs::write(bug.join("summary.txt"), "widget always fails").unwrap();

    let out_path = dir.path().join("corpus.jsonl");
    let out = bugbrief(&[
        "ingest",
        "--root",
        root.to_str().unwrap(),
        "--format",
        "defects4j",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let line = fs::read_to_string(&out_path).unwrap();
    let record: serde_json::Value = serde_json::from_str(line.lines().next().unwrap()).unwrap();
    assert_eq!(record["bug_id"], "proj-1");
    assert_eq!(record["project"], "proj");
    assert_eq!(record["artifacts"][0]["kind"], "buggy_code");
}

#[test]
fn runtime_failures_exit_two() {
    let out = bugbrief(&["evaluate", "--results", "/nonexistent/r.jsonl", "--corpus", "/nonexistent/c.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_variant_exits_one() {
    let out = bugbrief(&[
        "export-finetune",
        "--corpus",
        fixture("finetune10.jsonl").to_str().unwrap(),
        "--variant",
        "nonsense",
        "--out",
        "/tmp/never-written.jsonl",
    ]);
    assert_eq!(out.status.code(), Some(1));
}
