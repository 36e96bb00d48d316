//! End-to-end tests of the `mixlin` binary: output determinism, exit
//! codes, and the gen → solve pipeline.

use std::path::Path;
use std::process::{Command, Output};

fn mixlin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mixlin"))
}

fn run_ok(args: &[&str], threads: &str, dir: &Path) -> Output {
    let out = mixlin()
        .args(args)
        .env("RAYON_NUM_THREADS", threads)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn gen_output_is_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "gen", "--p", "6", "--k", "2", "--n", "40", "--delta", "1.2", "--seed", "7",
    ];
    let a = run_ok(&args, "1", dir.path());
    let b = run_ok(&args, "4", dir.path());
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
}

#[test]
fn solve_output_is_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "solve", "--p", "8", "--k", "2", "--n", "500", "--delta", "1.2", "--seed", "3",
        "--init", "tensor",
    ];
    let a = run_ok(&args, "1", dir.path());
    let b = run_ok(&args, "3", dir.path());
    assert_eq!(a.stdout, b.stdout);
    let parsed: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(parsed.get("report").is_some());
    assert!(parsed.get("termination").is_some());
}

#[test]
fn trace_files_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    for (name, threads) in [("a", "1"), ("b", "4")] {
        run_ok(
            &[
                "trace", "--p", "6", "--k", "2", "--n", "300", "--delta", "1.2", "--trials",
                "6", "--seed", "11", "--init", "tensor", "--out", name,
            ],
            threads,
            dir.path(),
        );
    }
    let a_json = std::fs::read(dir.path().join("a.json")).unwrap();
    let b_json = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a_json, b_json);
    let a_csv = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b_csv = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a_csv, b_csv);
    assert!(!a_csv.is_empty());
}

#[test]
fn grid_files_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    for (name, threads) in [("ga.csv", "1"), ("gb.csv", "2")] {
        run_ok(
            &[
                "grid", "--p", "5", "--k", "2", "--n", "120,240", "--delta", "1.2",
                "--trials", "5", "--seed", "13", "--out", name,
            ],
            threads,
            dir.path(),
        );
    }
    let a = std::fs::read(dir.path().join("ga.csv")).unwrap();
    let b = std::fs::read(dir.path().join("gb.csv")).unwrap();
    assert_eq!(a, b);
    let a_meta = std::fs::read(dir.path().join("ga.csv.meta.json")).unwrap();
    let b_meta = std::fs::read(dir.path().join("gb.csv.meta.json")).unwrap();
    assert_eq!(a_meta, b_meta);

    let text = String::from_utf8(a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3); // header + 2 cells
    assert!(lines[0].starts_with("n,p,k,trials,recovery_prob"));
    // timing is off by default, so the seconds column is zero
    for line in &lines[1..] {
        assert!(line.ends_with(",0.000"), "unexpected timing in {line}");
    }
}

#[test]
fn gen_then_solve_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        &[
            "gen", "--p", "5", "--k", "2", "--n", "400", "--delta", "1.2", "--seed", "21",
            "--out", "instance.json",
        ],
        "1",
        dir.path(),
    );
    let out = run_ok(
        &["solve", "--data", "instance.json", "--init", "oracle"],
        "1",
        dir.path(),
    );
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(parsed["init_error"], 0.0);
    assert_eq!(parsed["termination"], "exact_recovery");
    assert_eq!(parsed["label_accuracy"], 1.0);
}

#[test]
fn config_file_drives_grid_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"p": 5, "k": 2, "n": [100], "trials": 4, "seed": 5, "init": "oracle"}"#,
    )
    .unwrap();
    run_ok(
        &["grid", "--config", "cfg.json", "--out", "from_file.csv"],
        "1",
        dir.path(),
    );
    let text = std::fs::read_to_string(dir.path().join("from_file.csv")).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("100,5,2,4,1"));

    // the flag overrides the file's n
    run_ok(
        &[
            "grid", "--config", "cfg.json", "--n", "60", "--out", "override.csv",
        ],
        "1",
        dir.path(),
    );
    let text = std::fs::read_to_string(dir.path().join("override.csv")).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("60,5,2,4,"));
}

#[test]
fn exit_codes_match_failure_classes() {
    let dir = tempfile::tempdir().unwrap();

    // bad arguments: k > p
    let out = mixlin()
        .args(["solve", "--p", "2", "--k", "3", "--n", "50", "--seed", "1"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // bad arguments: unknown flag
    let out = mixlin()
        .args(["solve", "--bogus"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // numerical failure: all-zero responses give a zero second moment,
    // which cannot be whitened
    let degenerate = serde_json::json!({
        "params": {"k": 2, "p": 2, "betas": [[1.0, 0.0], [0.0, 1.0]],
                    "weights": [0.5, 0.5], "seed": 0},
        "dataset": {"n": 3, "p": 2,
                     "xs": [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
                     "ys": [0.0, 0.0, 0.0], "labels": [0, 1, 0], "seed": 0}
    });
    std::fs::write(
        dir.path().join("degenerate.json"),
        serde_json::to_string(&degenerate).unwrap(),
    )
    .unwrap();
    let out = mixlin()
        .args(["solve", "--data", "degenerate.json", "--init", "tensor"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(2),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    // io failure: unwritable output path
    let out = mixlin()
        .args([
            "grid", "--p", "4", "--k", "2", "--n", "50", "--trials", "1", "--seed", "1",
            "--init", "oracle", "--out", "/nonexistent-dir/grid.csv",
        ])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));

    // help exits zero
    let out = mixlin().args(["--help"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn timing_flag_fills_seconds_column() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        &[
            "grid", "--p", "10", "--k", "2", "--n", "20000", "--trials", "8", "--seed", "2",
            "--init", "tensor", "--timing", "--out", "timed.csv",
        ],
        "1",
        dir.path(),
    );
    let text = std::fs::read_to_string(dir.path().join("timed.csv")).unwrap();
    let row = text.lines().nth(1).unwrap();
    let seconds: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    assert!(seconds > 0.0);
}
