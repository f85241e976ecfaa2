//! End-to-end tests driving the compiled binary.

use std::path::Path;
use std::process::{Command, Output};

fn hk(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hk"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

#[test]
fn generate_then_run_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let gen = [
        "generate", "--generator", "random-interval", "--n", "9", "--span", "4", "--seed", "11",
        "--mode", "exact", "--out", "line.txt",
    ];
    stdout(&hk(dir.path(), &gen));
    let first = std::fs::read_to_string(dir.path().join("line.txt")).unwrap();
    stdout(&hk(dir.path(), &gen));
    let second = std::fs::read_to_string(dir.path().join("line.txt")).unwrap();
    assert_eq!(first, second);

    let run = [
        "run", "--instance", "line.txt", "--mode", "exact", "--monitors",
        "order,gaps,weights,symmetry,hull,movefar",
    ];
    let a = stdout(&hk(dir.path(), &run));
    let b = stdout(&hk(dir.path(), &run));
    assert_eq!(a, b);
    assert!(a.contains("\"format\":\"hk-trajectory\""));
    assert!(a.contains("\"summary\":true"));
    assert!(a.contains("\"violations\":[]"));
}

#[test]
fn run_rejects_missing_instance() {
    let dir = tempfile::tempdir().unwrap();
    let out = hk(dir.path(), &["run", "--instance", "nope.txt"]);
    assert!(!out.status.success());
}

#[test]
fn run_rejects_malformed_instance() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.txt"), "0.0\nnot-a-number\n").unwrap();
    let out = hk(dir.path(), &["run", "--instance", "bad.txt"]);
    assert!(!out.status.success());
}

#[test]
fn budget_exhaustion_still_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("line.txt"), "0\n1/2\n1\n3/2\n2\n").unwrap();
    let out = hk(
        dir.path(),
        &["run", "--instance", "line.txt", "--mode", "exact", "--max-steps", "1"],
    );
    let text = stdout(&out);
    assert!(text.contains("\"budget_exhausted\":true"));
}

#[test]
fn verify_smoke_passes_and_corrupt_control_fails() {
    let dir = tempfile::tempdir().unwrap();
    let ok = hk(dir.path(), &["verify", "--suite", "one_dim", "--count", "5"]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));

    let bad = hk(
        dir.path(),
        &["verify", "--suite", "one_dim", "--count", "5", "--corrupt-step"],
    );
    assert!(!bad.status.success(), "corrupted dynamics must fail verification");
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL"));
}

#[test]
fn noisy_run_uses_generated_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    stdout(&hk(
        dir.path(),
        &[
            "generate", "--generator", "random-interval", "--n", "6", "--span", "3", "--seed",
            "3", "--mode", "exact", "--out", "line.txt", "--eta", "1/2",
        ],
    ));
    assert!(dir.path().join("line.txt.noisy.json").exists());
    let run = ["run", "--instance", "line.txt", "--mode", "exact", "--eta", "1/2"];
    let a = stdout(&hk(dir.path(), &run));
    let b = stdout(&hk(dir.path(), &run));
    assert_eq!(a, b);
    assert!(a.contains("\"summary\":true"));
}

#[test]
fn bench_csv_has_versioned_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&hk(
        dir.path(),
        &[
            "bench", "--generator", "unit-line", "--n-list", "1,5,10", "--seeds", "1", "--mode",
            "exact",
        ],
    ));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# hk-bench v1");
    assert!(lines[1].starts_with("generator,n,d,seed,mode,converged_at"));
    assert_eq!(lines.len(), 5);
    // n = 1 is born converged
    assert!(lines[2].starts_with("unit_line,1,1,1,exact,0,false,0,"));
}

#[test]
fn oracle_csv_matches_simulated_polygon() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&hk(dir.path(), &["oracle", "--n", "8"]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# hk-ngon-oracle v1");
    assert_eq!(lines[1], "t,side,valid");
    assert!(lines[2].starts_with("0,1,true"));
    assert!(lines.last().unwrap().ends_with("false"));
}

#[test]
fn csv_trajectory_format() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("pair.txt"), "0\n1\n").unwrap();
    let text = stdout(&hk(
        dir.path(),
        &["run", "--instance", "pair.txt", "--mode", "exact", "--format", "csv"],
    ));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# hk-trajectory-csv v1");
    assert!(lines[2].starts_with("1,1/2|1/2,"));
}
