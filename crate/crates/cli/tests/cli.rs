use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn lps(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lps")).args(args).output().expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn config_run_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = configs().join("fluid.json");
    let out = lps(&["fluid", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for file in ["report.json", "traj.csv", "timing.json"] {
        assert!(dir.path().join(file).exists(), "missing {file}");
    }
    let csv = std::fs::read_to_string(dir.path().join("traj.csv")).unwrap();
    assert!(csv.starts_with("t,q1,q2,region,w_tot\n"));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = configs().join("rbm.json");
    let out = lps(&["rbm", "--config", config.to_str().unwrap(), "--seed", "99", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 99);
}

#[test]
fn direct_flags_print_report() {
    let spec = configs().join("networks/reference.json");
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let out = lps(&[
        "fluid", "--spec", spec.to_str().unwrap(), "--q0", "3,3", "--horizon", "40", "--out", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["command"], "fluid");
    assert!(csv.exists());

    let out = lps(&["rbm", "--theta", "1", "--sigma2", "2", "--stationary", "--x", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn wrong_command_for_config_is_rejected() {
    let config = configs().join("fluid.json");
    let out = lps(&["ssc", "--config", config.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("fluid"));
}

#[test]
fn thread_cap_must_be_positive() {
    let config = configs().join("params.json");
    let out = Command::new(env!("CARGO_BIN_EXE_lps"))
        .args(["params", "--config", config.to_str().unwrap(), "--out", "/nonexistent/never"])
        .env("LPS_THREADS", "0")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("LPS_THREADS"));
}
