//! The process-level contract: 0 on success, 2 for usage and input
//! problems, 1 for everything else.

use std::process::Command;

fn code(args: &[&str], envs: &[(&str, &str)]) -> i32 {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_latency-arb"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::null())
        .status()
        .unwrap()
        .code()
        .unwrap()
}

#[test]
fn success_paths_exit_zero() {
    assert_eq!(code(&["--help"], &[]), 0);
    assert_eq!(code(&["simulate", "--help"], &[]), 0);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("empty.csv");
    let empty_run = code(
        &["simulate", "--minutes", "0", "--out", out.to_str().unwrap()],
        &[],
    );
    assert_eq!(empty_run, 0);
    let body = std::fs::read_to_string(&out).unwrap();
    assert_eq!(body.lines().count(), 1, "expected a header-only CSV");
}

#[test]
fn usage_and_input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let out = out.to_str().unwrap();

    // clap-level: unknown flag, missing required argument.
    assert_eq!(code(&["simulate", "--no-such-flag"], &[]), 2);
    assert_eq!(code(&["ingest", "--out", out], &[]), 2);

    // Domain-level: bad enum value, conflicting model flags.
    assert_eq!(code(&["simulate", "--regime", "dutch", "--out", out], &[]), 2);
    assert_eq!(
        code(&["simulate", "--kappa", "0.2", "--out", out], &[]),
        2,
        "kappa without sigma-step"
    );

    // Missing and malformed input files.
    assert_eq!(
        code(&["solve", "--dist", "/nonexistent.json", "--policy-out", out], &[]),
        2
    );
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, b"{\"step_ms\": 10}").unwrap();
    assert_eq!(
        code(&["solve", "--dist", bad.to_str().unwrap(), "--policy-out", out], &[]),
        2
    );

    // Environment.
    assert_eq!(
        code(
            &["capture", "--out", out],
            &[("LATENCY_ARB_THREADS", "many")],
        ),
        2
    );
}
