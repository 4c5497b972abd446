//! End-to-end checks of the binary: exit codes, output files, error paths.

use std::path::Path;
use std::process::Command;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_mu-probe"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn estimate_known_plant_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    write(
        &cfg,
        r#"{"plant": {"A": [[0.0]], "B": [[0.0]], "C": [[0.0]], "D": [[0.5]]},
            "structure": {"r": [0,0], "m": [1,1]}, "N": 16, "seed": 1}"#,
    );
    let out = tmp.path().join("out");
    let (code, stdout, _) = run(&[
        "estimate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("mu = 0.5"), "stdout: {stdout}");
    assert!(out.join("bins.csv").exists());
    assert!(out.join("summary.json").exists());
    assert!(out.join("manifest.json").exists());
}

#[test]
fn bad_structure_sum_exits_one_with_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    write(
        &cfg,
        r#"{"plant": {"n": 3, "seed": 1}, "structure": {"r": [0,0], "m": [1,2]}, "N": 16}"#,
    );
    let out = tmp.path().join("out");
    let (code, _, stderr) = run(&[
        "estimate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("structure"), "stderr: {stderr}");
    // no partial outputs on validation failure
    assert!(!out.exists() || std::fs::read_dir(&out).unwrap().next().is_none());
}

#[test]
fn unknown_config_key_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    write(
        &cfg,
        r#"{"plant": {"n": 2, "seed": 1}, "structure": {"r": [0,0], "m": [1,2]}, "mystery": 5}"#,
    );
    let (code, _, stderr) = run(&["estimate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stderr.contains("error"), "stderr: {stderr}");
}

#[test]
fn forced_nonconvergence_exits_two_but_writes_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    write(
        &cfg,
        r#"{"plant": {"n": 2, "seed": 2}, "structure": {"r": [0,0], "m": [1,2]},
            "N": 32, "seed": 1, "max_iter": 1}"#,
    );
    let out = tmp.path().join("out");
    let (code, _, _) = run(&[
        "estimate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(code, 2);
    let summary = std::fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"converged\": false"), "{summary}");
}

#[test]
fn oracle_subcommand_writes_bounds() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    write(
        &cfg,
        r#"{"matrix": {"re": [[2.0, 0.0], [0.0, 1.0]]},
            "structure": {"r": [2,1,1], "m": [0,0]}, "samples": 200}"#,
    );
    let out = tmp.path().join("out");
    let (code, stdout, _) = run(&[
        "oracle",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("lower = 2.0"), "stdout: {stdout}");
    assert!(out.join("bounds.json").exists());
}

#[test]
fn bench_noise_campaign_writes_csv_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    write(
        &cfg,
        r#"{"kind": "noise", "plant": {"n": 2, "seed": 6},
            "structure": {"r": [0,0], "m": [1,2]},
            "variances": [0.0, 1e-4], "reps": 2, "n_freq": 32, "seed": 1}"#,
    );
    let out = tmp.path().join("out");
    let (code, _, _) = run(&[
        "bench",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(out.join("noise.csv")).unwrap();
    assert!(csv.starts_with("sigma2,mu_tilde_mean,freq_tilde,mu_bar_mean,freq_bar"));
    assert_eq!(csv.lines().count(), 3);
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("noise.csv"));
    assert!(manifest.contains("mu_model"));
}

#[test]
fn help_lists_all_flags() {
    let (code, stdout, _) = run(&["estimate", "--help"]);
    assert_eq!(code, 0);
    for flag in ["--config", "--seed", "--n-freq", "--tol", "--noise", "--reps", "--out", "--quiet"] {
        assert!(stdout.contains(flag), "missing {flag} in help: {stdout}");
    }
}

#[test]
fn thread_cap_env_is_accepted() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    write(
        &cfg,
        r#"{"plant": {"n": 2, "seed": 4}, "structure": {"r": [0,0], "m": [1,2]}, "N": 16}"#,
    );
    let out = tmp.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_mu-probe"))
        .args([
            "estimate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--quiet",
        ])
        .env("MU_PROBE_THREADS", "1")
        .status()
        .unwrap();
    assert!(status.success());
}
