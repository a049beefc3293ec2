//! End-to-end checks of the command-line interface: exit-code contract,
//! manifest handling, flag overrides, and report artifacts. Runs use small
//! path counts; statistical quality is covered by the acceptance suite.

use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_arctanlaw"))
}

#[test]
fn verify_pass_exits_zero_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["verify", "--experiment", "density_consistency"])
        .args(["--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("density_consistency: PASS"), "stdout: {stdout}");
    let report = fs::read_to_string(dir.path().join("density_consistency/report.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(json["experiment"], "density_consistency");
    assert_eq!(json["pass"], true);
    assert!(json["checks"].as_array().unwrap().len() >= 2);
}

#[test]
fn verify_tolerance_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // An impossibly tight tolerance turns a passing run into a reported
    // failure: exit code 1, not an error.
    let out = bin()
        .args(["verify", "--experiment", "bm_arctangent", "--paths", "2000"])
        .args(["--tolerance", "1e-12"])
        .args(["--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAIL"), "stdout: {stdout}");
}

#[test]
fn usage_and_config_errors_exit_two() {
    // Unknown experiment name.
    let out = bin().args(["verify", "--experiment", "no_such_experiment"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    // Invalid numeric configuration.
    let out = bin()
        .args(["verify", "--experiment", "bm_arctangent", "--dt", "-1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Malformed manifest file.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.manifest");
    fs::write(&path, "experiment = bm_arctangent\nnot a key value line\n").unwrap();
    let out = bin().args(["verify", "--manifest", path.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn manifest_file_drives_run_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.manifest");
    fs::write(
        &path,
        "# comment line\nexperiment = eta_invariance\npaths = 1500\nseed = 7\n",
    )
    .unwrap();
    let out = bin()
        .args(["verify", "--manifest", path.to_str().unwrap()])
        .args(["--paths", "2000"]) // flag wins over the file value
        .args(["--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(dir.path().join("eta_invariance/report.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(json["seed"], 7);
}

#[test]
fn repeated_runs_produce_identical_reports() {
    let run = |dir: &std::path::Path, workers: &str| {
        let out = bin()
            .args(["verify", "--experiment", "bm_arctangent", "--paths", "3000"])
            .args(["--workers", workers])
            .args(["--out", dir.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        let text = fs::read_to_string(dir.join("bm_arctangent/report.json")).unwrap();
        let mut json: serde_json::Value = serde_json::from_str(&text).unwrap();
        json.as_object_mut().unwrap().remove("duration_secs");
        json
    };
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    assert_eq!(run(d1.path(), "1"), run(d2.path(), "3"));
}

#[test]
fn law_subcommand_prints_csv_values() {
    let out = bin()
        .args(["law", "--spec", "bm", "--law", "cdf", "--r", "1", "--t", "1"])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    // (2/pi) arctan(1) = 0.5 at t = r.
    let value: f64 = stdout
        .lines()
        .last()
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((value - 0.5).abs() < 1e-12, "stdout: {stdout}");
}

#[test]
fn simulate_subcommand_emits_sample_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("samples.csv");
    let out = bin()
        .args(["simulate", "--spec", "bm", "--scheme", "exact_bm"])
        .args(["--r", "1", "--dt", "0.01", "--horizon", "3", "--paths", "50", "--seed", "1"])
        .args(["--out", csv.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "path_index,M_r,L_r,S,theta,U,occupation,censored_S,censored_U"
    );
    assert_eq!(lines.count(), 50);
}

#[test]
fn catalog_subcommand_lists_entries() {
    let out = bin().args(["catalog"]).output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    for name in ["bm", "cube", "feller", "wright_fisher", "gbm", "integrated_bm", "bounded_sigma"] {
        assert!(stdout.contains(name), "missing {name} in: {stdout}");
    }
}
