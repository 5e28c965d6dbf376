//! Command-line behavior: exit codes, outputs and provenance.

use std::fs;
use std::path::Path;

use aic_core::cli::{run_cli_with, EXIT_DATA, EXIT_OK, EXIT_USAGE};

fn run(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let argv = std::iter::once("aic").chain(args.iter().copied());
    let code = run_cli_with(argv, &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn simulate_train_classify_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let (code, _) = run(&["simulate", "--seed", "3", "--session", "pm", "--direction", "Entry-E", "--out", p(&data)]);
    assert_eq!(code, EXIT_OK);
    let csv = data.join("Entry-E_PM.csv");
    assert!(csv.exists());

    let model = dir.path().join("model.json");
    let (code, _) = run(&["train", "--session", "pm", "--data", p(&data), "--out", p(&model)]);
    assert_eq!(code, EXIT_OK);
    assert!(model.exists());
    assert!(dir.path().join("model.provenance.json").exists());

    let (code, text) = run(&["classify", "--model", p(&model), "--input", p(&csv)]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = text.lines().filter(|l| l.contains("category=")).collect();
    assert_eq!(lines.len(), 345);
    // The first rows are the base days, all inliers.
    assert!(lines[0].contains("category=1"));
    assert!(lines[0].contains("svm=skipped"));

    let report = dir.path().join("report");
    let (code, _) = run(&["evaluate", "--data", p(&data), "--report", p(&report)]);
    assert_eq!(code, EXIT_OK);
    let acc = fs::read_to_string(report.join("accuracy.csv")).unwrap();
    let avg = acc.lines().find(|l| l.starts_with("PM,Average")).unwrap();
    let grand: f64 = avg.rsplit(',').next().unwrap().parse().unwrap();
    assert!(grand >= 92.0, "{acc}");
    assert!(report.join("confusion.csv").exists());
    assert!(report.join("provenance.json").exists());
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.json");
    assert_eq!(run(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(run(&["simulate", "--bogus", "--out", p(dir.path())]).0, EXIT_USAGE);
    assert_eq!(
        run(&["train", "--session", "am", "--pca-dim", "0", "--data", p(dir.path()), "--out", p(&out)]).0,
        EXIT_USAGE
    );
    assert_eq!(run(&["train", "--data", p(dir.path()), "--out", p(&out)]).0, EXIT_USAGE);
    assert_eq!(run(&["evaluate", "--kernel", "cubic", "--data", "x", "--report", "y"]).0, EXIT_USAGE);
    assert_eq!(run(&["--help"]).0, EXIT_OK);
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(run(&["classify", "--model", p(&missing), "--input", p(&missing)]).0, EXIT_DATA);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"version\": 99}").unwrap();
    let csv = dir.path().join("in.csv");
    fs::write(&csv, "x").unwrap();
    assert_eq!(run(&["classify", "--model", p(&bad), "--input", p(&csv)]).0, EXIT_DATA);
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(
        run(&["evaluate", "--data", p(&empty), "--report", p(&dir.path().join("r"))]).0,
        EXIT_DATA
    );
}
