//! End-to-end tests of the `syncmarket` binary: exit codes, output formats,
//! determinism, and config resolution.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use syncmarket_cli::output::parse_csv;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_syncmarket"))
}

fn default_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.json")
}

fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("small.json");
    std::fs::write(
        &path,
        r#"{
            "counts": {"avs": 6, "mars": 6, "rsus": 1, "tasks_per_av": 2},
            "estimator_samples": 4
        }"#,
    )
    .unwrap();
    path
}

fn run_ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "command failed ({:?}): {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn missing_config_exits_2() {
    let out = bin().args(["run", "--config", "/no/such/file.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"counts": {"avs": "many"}}"#).unwrap();
    let out = bin().args(["run", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("schema"), "diagnostic missing: {err}");
}

#[test]
fn invalid_config_values_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zero.json");
    std::fs::write(&path, r#"{"counts": {"avs": 0, "mars": 3, "rsus": 1, "tasks_per_av": 2}}"#)
        .unwrap();
    let out = bin().args(["run", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_emits_expected_csv_shape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = bin()
        .args(["run", "--sweep", "tasks:1..3", "--seeds", "4", "--mechanisms", "mtepvisa,pvisa"])
        .args(["--master-seed", "9", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    let text = run_ok(&out);
    let rows = parse_csv(&text).unwrap();
    // 2 mechanisms x 3 sweep points x 5 metrics.
    assert_eq!(rows.len(), 2 * 3 * 5);
    assert!(rows.iter().all(|r| r.6 == 4));
    assert!(rows.iter().any(|r| r.0 == "mtepvisa"));
    assert!(rows.iter().any(|r| r.0 == "pvisa"));
    assert!(rows.iter().any(|r| r.3 == "total_surplus"));
}

#[test]
fn single_seed_run_matches_direct_mechanism_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = small_config(dir.path());
    let out = bin()
        .args(["run", "--sweep", "tasks:2..2", "--seeds", "1", "--mechanisms", "pvisa"])
        .args(["--master-seed", "11", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    let rows = parse_csv(&run_ok(&out)).unwrap();

    // Recompute directly through the library.
    let mut config = syncmarket_core::ScenarioConfig::default();
    config.counts = syncmarket_core::market::Counts { avs: 6, mars: 6, rsus: 1, tasks_per_av: 2 };
    config.estimator_samples = 4;
    let seed = syncmarket_core::seed::sub_seed(11, syncmarket_core::seed::domain::CELL, 0, 0);
    let scenario = syncmarket_core::sample_scenario(&config, seed).unwrap();
    let bids = syncmarket_core::truthful_av_bids(&scenario);
    let outcome = syncmarket_core::run_pvisa(&scenario, &bids).unwrap();

    let total = rows.iter().find(|r| r.3 == "total_surplus").unwrap();
    assert_eq!(total.4, outcome.surplus_total);
    let revenue = rows.iter().find(|r| r.3 == "revenue").unwrap();
    assert_eq!(revenue.4, outcome.revenue);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (out, parallel) in [(&a, "1"), (&b, "2")] {
        let status = bin()
            .args(["run", "--sweep", "tasks:1..2", "--seeds", "6", "--master-seed", "3"])
            .args(["--parallel", parallel, "--out"])
            .arg(out)
            .arg("--config")
            .arg(&cfg)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let bytes_a = std::fs::read(&a).unwrap();
    let bytes_b = std::fs::read(&b).unwrap();
    assert_eq!(bytes_a, bytes_b, "outputs differ across runs/parallelism");
}

#[test]
fn json_format_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = bin()
        .args(["run", "--sweep", "tasks:1..2", "--seeds", "3", "--format", "json"])
        .args(["--master-seed", "5", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    let text = run_ok(&out);
    let parsed: syncmarket_core::ExperimentResult = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed.cells.len(), 3 * 2);
}

#[test]
fn inspect_is_deterministic_and_schema_complete() {
    let out1 = bin()
        .args(["inspect", "--seed", "7", "--config"])
        .arg(default_config())
        .output()
        .unwrap();
    let out2 = bin()
        .args(["inspect", "--seed", "7", "--config"])
        .arg(default_config())
        .output()
        .unwrap();
    let a = run_ok(&out1);
    let b = run_ok(&out2);
    assert_eq!(a, b, "inspect output must be byte-stable");

    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    for field in [
        "winner_av",
        "pay_av",
        "winner_mar",
        "pay_mar",
        "alpha",
        "per_task_delays",
        "display_duration",
        "surplus_dt",
        "surplus_ar_functional",
        "surplus_ar_infotainment",
        "surplus_total",
        "revenue",
    ] {
        assert!(v["outcome"].get(field).is_some(), "outcome field {field} missing");
    }
    assert!(v["score_board"].get("physical_scores").is_some());
}

#[test]
fn inspect_matches_golden_file() {
    let golden_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/inspect_default_seed7.json");
    let golden = std::fs::read_to_string(&golden_path).unwrap();
    let out = bin()
        .args(["inspect", "--seed", "7", "--config"])
        .arg(default_config())
        .output()
        .unwrap();
    assert_eq!(run_ok(&out), golden, "inspect output drifted from the golden file");
}

#[test]
fn inspect_infeasible_market_has_no_winners() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tight.json");
    std::fs::write(
        &path,
        r#"{
            "counts": {"avs": 4, "mars": 4, "rsus": 1, "tasks_per_av": 2},
            "task": {
                "size_mb": {"uniform": {"low": 0.5, "high": 1.0}},
                "cpu_gcycles_per_mb": {"uniform": {"low": 0.0, "high": 1.0}},
                "deadline_s": {"uniform": {"low": 1e-6, "high": 1e-6}}
            },
            "estimator_samples": 4
        }"#,
    )
    .unwrap();
    let out = bin().args(["inspect", "--seed", "3", "--config"]).arg(&path).output().unwrap();
    let v: serde_json::Value = serde_json::from_str(&run_ok(&out)).unwrap();
    assert!(v["outcome"]["winner_av"].is_null());
    assert!(v["outcome"]["winner_mar"].is_null());
    assert_eq!(v["outcome"]["surplus_total"], 0.0);
}

#[test]
fn verify_empty_check_list_exits_0_with_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = bin()
        .args(["verify", "--checks", "", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
}

#[test]
fn verify_flags_the_first_price_control() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = bin()
        .args(["verify", "--checks", "strategy-proofness", "--mechanism", "first-price-control"])
        .args(["--scenarios", "15", "--grid", "25", "--master-seed", "7", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "control mechanism must fail verification");
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    // Deviation reports precede the summary line.
    assert!(lines.any(|l| l.contains("\"gain\"")));
    assert!(text.lines().last().unwrap().contains("\"pass\":false"));
}

#[test]
fn verify_passes_on_the_proposed_mechanism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = bin()
        .args(["verify", "--checks", "strategy-proofness,ir", "--scenarios", "15"])
        .args(["--grid", "25", "--ir-batch", "200", "--master-seed", "7", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "verification failed: {}",
        String::from_utf8_lossy(&out.stdout)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().all(|l| l.contains("\"pass\":true")));
}

#[test]
fn config_dir_env_var_resolves_bare_names() {
    let dir = tempfile::tempdir().unwrap();
    small_config(dir.path());
    let out = bin()
        .args(["inspect", "--seed", "1", "--config", "small.json"])
        .env(syncmarket_cli::config::CONFIG_DIR_ENV, dir.path())
        .current_dir(tempfile::tempdir().unwrap().path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}
