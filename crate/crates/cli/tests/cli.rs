//! End-to-end tests of the binary: determinism of outputs, exit codes, and
//! the simulate -> ingest -> analytic round trip.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chainq"))
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

const SIM_CONFIG: &str = r#"{
  "schema_version": 1,
  "sim": {
    "lambda": 1.0, "mu": 1.0, "beta": 5,
    "block_time_law": "exponential",
    "scheduler": {"kind": "priority"},
    "horizon_blocks": 4000, "warmup_blocks": 200, "seed": 17
  }
}"#;

#[test]
fn analytic_mm1_prints_half() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "a.json",
        r#"{"schema_version":1,"model":{"kind":"rates","lambda":1.0,"mu":2.0,"beta":1}}"#,
    );
    let out_dir = dir.path().join("out");
    let out = run_ok(bin().args([
        "analytic",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("p = 0.5"), "stdout: {stdout}");

    // tables reload and sum to one
    let tables: serde_json::Value =
        serde_json::from_slice(&read(&out_dir.join("tables.json"))).unwrap();
    let first: f64 = tables["p_kpp_first"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .sum();
    assert!((first - 1.0).abs() < 1e-9);
    assert!(out_dir.join("kprime.csv").exists());
    assert!(out_dir.join("manifest.json").exists());
}

#[test]
fn unstable_parameters_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "a.json",
        r#"{"schema_version":1,"model":{"kind":"rates","lambda":10.0,"mu":1.0,"beta":5}}"#,
    );
    let out = bin()
        .args(["analytic", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("no root in (0, 1)"), "stderr: {stderr}");
}

#[test]
fn unknown_config_key_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "a.json",
        r#"{"schema_version":1,"model":{"kind":"rates","lambda":1.0,"mu":2.0,"beta":1},"oops":1}"#,
    );
    let out = bin()
        .args(["analytic", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.json", SIM_CONFIG);
    let out1 = dir.path().join("r1");
    let out2 = dir.path().join("r2");
    for out in [&out1, &out2] {
        run_ok(bin().args([
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]));
    }
    for name in [
        "blocks.csv",
        "outcomes.csv",
        "transactions.csv",
        "trace.json",
        "summary.json",
    ] {
        assert_eq!(
            read(&out1.join(name)),
            read(&out2.join(name)),
            "{name} differs between identical runs"
        );
    }
}

#[test]
fn seed_override_changes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.json", SIM_CONFIG);
    let out1 = dir.path().join("r1");
    let out2 = dir.path().join("r2");
    run_ok(bin().args([
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out1.to_str().unwrap(),
    ]));
    run_ok(bin().args([
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "99",
        "--out",
        out2.to_str().unwrap(),
    ]));
    assert_ne!(
        read(&out1.join("blocks.csv")),
        read(&out2.join("blocks.csv"))
    );
}

#[test]
fn simulate_ingest_analytic_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.json", SIM_CONFIG);
    let sim_out = dir.path().join("sim");
    run_ok(bin().args([
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        sim_out.to_str().unwrap(),
    ]));

    let ingest_out = dir.path().join("ingest");
    run_ok(bin().args([
        "ingest",
        sim_out.join("transactions.csv").to_str().unwrap(),
        "--beta",
        "5",
        "--threshold",
        "-1.0",
        "--out",
        ingest_out.to_str().unwrap(),
    ]));

    let analytic_out = dir.path().join("analytic");
    run_ok(bin().args([
        "analytic",
        "--config",
        ingest_out.join("inputs.json").to_str().unwrap(),
        "--out",
        analytic_out.to_str().unwrap(),
    ]));

    // the estimated first-block probability is close to the rate model's
    let tables: serde_json::Value =
        serde_json::from_slice(&read(&analytic_out.join("tables.json"))).unwrap();
    let p_kprime0 = tables["p_kprime"].as_array().unwrap()[0].as_f64().unwrap();
    let model = chainq_core::PriorityQueueModel::new(1.0, 1.0, 5).unwrap();
    let expected = 1.0 - model.p.powi(5);
    assert!(
        (p_kprime0 - expected).abs() < 0.02,
        "P(K'=0) {p_kprime0} vs {expected}"
    );
}

#[test]
fn ingest_errors_are_row_numbered() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(
        dir.path(),
        "bad.csv",
        "block_number,tx_index,priority\n5,0,0.5\n4,0,0.5\n",
    );
    let out = bin()
        .args([
            "ingest",
            csv.to_str().unwrap(),
            "--beta",
            "5",
            "--threshold",
            "0.0",
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("row 3"), "stderr: {stderr}");
}

#[test]
fn ingest_empty_file_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "empty.csv", "block_number,tx_index,priority\n");
    let out = bin()
        .args([
            "ingest",
            csv.to_str().unwrap(),
            "--beta",
            "5",
            "--threshold",
            "0.0",
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mc_price_zero_prefix_and_chebyshev_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "mc.json",
        r#"{
          "schema_version": 1,
          "scenario": {
            "pool": {"rule": "cpmm", "level": 10000.0, "initial_reserve_a": 100.0},
            "law": {"kind": "uniform_symmetric", "l": 1.0},
            "k_model": {"kind": "fixed", "k": 0},
            "order": 1.0, "n_samples": 100, "seed": 4
          }
        }"#,
    );
    let out_dir = dir.path().join("out");
    run_ok(bin().args([
        "mc-price",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]));
    let report: serde_json::Value =
        serde_json::from_slice(&read(&out_dir.join("report.json"))).unwrap();
    assert!(report["report"]["cv_price"].as_f64().unwrap() < 1e-12);
    let cheb = report["chebyshev"].as_array().unwrap();
    assert_eq!(cheb[0]["k"].as_f64().unwrap(), 2.0);
    assert_eq!(cheb[0]["prob_bound"].as_f64().unwrap(), 0.25);
}

#[test]
fn mc_price_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "mc.json",
        r#"{
          "schema_version": 1,
          "scenario": {
            "pool": {"rule": "cpmm", "level": 10000.0, "initial_reserve_a": 100.0},
            "law": {"kind": "uniform_symmetric", "l": 1.0},
            "k_model": {"kind": "geometric", "p": 0.8},
            "order": 1.0, "n_samples": 5000, "seed": 21
          }
        }"#,
    );
    let out1 = dir.path().join("t1");
    let out2 = dir.path().join("t4");
    run_ok(bin().args([
        "mc-price",
        "--config",
        cfg.to_str().unwrap(),
        "--threads",
        "1",
        "--out",
        out1.to_str().unwrap(),
    ]));
    run_ok(bin().args([
        "mc-price",
        "--config",
        cfg.to_str().unwrap(),
        "--threads",
        "4",
        "--out",
        out2.to_str().unwrap(),
    ]));
    assert_eq!(
        read(&out1.join("report.json")),
        read(&out2.join("report.json"))
    );
    assert_eq!(
        read(&out1.join("replications.csv")),
        read(&out2.join("replications.csv"))
    );
}

#[test]
fn sandwich_audit_reports_clean_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sw.json",
        r#"{
          "schema_version": 1,
          "sim": {
            "lambda": 3.0, "mu": 1.0, "beta": 6,
            "block_time_law": "exponential",
            "scheduler": {"kind": "sandwicher", "budget": 5.0},
            "horizon_blocks": 600, "warmup_blocks": 50, "seed": 3,
            "orderflow": {"order_fraction": 0.25, "law": {"kind": "uniform_symmetric", "l": 0.5}},
            "pool": {"rule": "cpmm", "level": 10000.0, "initial_reserve_a": 100.0}
          }
        }"#,
    );
    let out_dir = dir.path().join("out");
    run_ok(bin().args([
        "sandwich-audit",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]));
    let audit: serde_json::Value =
        serde_json::from_slice(&read(&out_dir.join("audit.json"))).unwrap();
    assert_eq!(audit["trichotomy_violations"].as_u64().unwrap(), 0);
    assert_eq!(audit["unsandwiched_fraction"].as_f64().unwrap(), 0.0);
    assert!(audit["victims_included"].as_u64().unwrap() > 0);
    assert!(audit["total_payoff_b"].as_f64().unwrap() > 0.0);

    // wrong scheduler kind is a config error
    let bad = write(dir.path(), "bad.json", SIM_CONFIG);
    let out = bin()
        .args(["sandwich-audit", "--config", bad.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
