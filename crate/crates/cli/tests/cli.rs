use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn myoalign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_myoalign")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = myoalign(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_experiment_writes_every_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    ok(&["run-experiment", "--days", "3", "--seed", "5", "--out", path(&out)]);
    for f in ["summary.csv", "summary.svg", "model.csv", "mapping_day2.csv", "mapping_day3.csv", "run.toml"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    let run = fs::read_to_string(out.join("run.toml")).unwrap();
    assert!(run.contains("seed = 5"));
    assert!(run.contains("noise_std = 0.0625"));
}

#[test]
fn staged_commands_match_the_one_shot_run() {
    let tmp = tempfile::tempdir().unwrap();
    let p = |s: &str| tmp.path().join(s);
    let common = ["--days", "3", "--drift", "general-linear", "--magnitude", "0.8", "--seed", "11"];
    let with = |cmd: &str, rest: &[&str]| {
        let mut v = vec![cmd];
        v.extend_from_slice(&common);
        v.extend_from_slice(rest);
        v.into_iter().map(String::from).collect::<Vec<_>>()
    };
    let run = |args: Vec<String>| ok(&args.iter().map(String::as_str).collect::<Vec<_>>());

    run(with("simulate", &["--out", path(&p("data"))]));
    assert!(p("data/manifest.toml").is_file());
    assert!(p("data/day02/drift.csv").is_file());
    run(with("train", &["--data", path(&p("data")), "--out", path(&p("m"))]));
    run(with("calibrate", &["--data", path(&p("data")), "--out", path(&p("m"))]));
    run(with("evaluate", &["--data", path(&p("data")), "--model-dir", path(&p("m"))]));
    run(with("run-experiment", &["--out", path(&p("once"))]));

    let staged = fs::read(p("m/summary.csv")).unwrap();
    assert_eq!(staged, fs::read(p("once/summary.csv")).unwrap());
    assert_eq!(fs::read(p("m/model.csv")).unwrap(), fs::read(p("once/model.csv")).unwrap());

    ok(&["report", "--summary", path(&p("m/summary.csv")), "--out", path(&p("redrawn"))]);
    assert_eq!(fs::read(p("redrawn/summary.csv")).unwrap(), staged);
    let svg = fs::read_to_string(p("redrawn/summary.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 6);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.toml");
    fs::write(&cfg, "days = 5\nseed = 3\n[geometry]\nwindows_per_rep = 10\n").unwrap();
    let out = tmp.path().join("o");
    ok(&["run-experiment", "--config", path(&cfg), "--days", "2", "--out", path(&out)]);
    let run = fs::read_to_string(out.join("run.toml")).unwrap();
    assert!(run.contains("days = 2"));
    assert!(run.contains("seed = 3"));
    assert!(run.contains("windows_per_rep = 10"));
}

#[test]
fn bad_input_fails_with_a_message() {
    let tmp = tempfile::tempdir().unwrap();
    let out = path(tmp.path());
    let r = myoalign(&["run-experiment", "--drift", "shear", "--out", out]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("unknown drift kind"));

    let r = myoalign(&["run-experiment", "--calibration-reps", "9", "--out", out]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("calibration_reps"));

    let r = myoalign(&["train", "--data", path(&tmp.path().join("nope")), "--out", out]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("loading dataset"));
}
