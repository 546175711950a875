//! Exit codes, report files and determinism of the command-line binary.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qhrom-sim"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qhrom-sim-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn code(args: &[&str], out: &PathBuf) -> i32 {
    bin().args(args).arg("--out-dir").arg(out).output().unwrap().status.code().unwrap()
}

#[test]
fn passing_suite_exits_zero_and_writes_reports() {
    let out = scratch("pass");
    assert_eq!(code(&["dec-roundtrip", "--N", "2", "--max-size", "2", "--exhaustive"], &out), 0);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("dec-roundtrip.json")).unwrap()).unwrap();
    assert_eq!(json["schema"], "qhrom-sim/report/v1");
    assert_eq!(json["verdict"], "pass");
    assert_eq!(json["config"]["command"]["dec-roundtrip"]["max_size"], 2);
    assert!(json["code_version"].is_string());
    let csv = std::fs::read_to_string(out.join("dec-roundtrip.csv")).unwrap();
    assert!(csv.starts_with("schema,suite,id,n,t,measured,bound,verdict"));
}

#[test]
fn failing_check_exits_one() {
    // the printed right-hand rule admits tuples that do not decode
    let out = scratch("fail");
    let args = ["good-tuple-census", "--N", "4", "--quads", "0", "--samples", "100", "--right-rule", "as-printed"];
    assert_eq!(code(&args, &out), 1);
}

#[test]
fn config_errors_exit_two() {
    let out = scratch("config");
    assert_eq!(code(&["dec-roundtrip", "--N", "6"], &out), 2);
    assert_eq!(code(&["attack-demo", "--no-such-flag"], &out), 2);
    assert_eq!(code(&["run-hybrids", "--pairs", "0-1"], &out), 2);
    assert!(!out.exists(), "nothing is written for a rejected config");
}

#[test]
fn budget_exhaustion_exits_three() {
    let out = scratch("budget");
    assert_eq!(code(&["verify-bounds", "--N-grid", "16", "--t", "2", "--max-labels", "50"], &out), 3);
    let status = bin()
        .args(["verify-bounds", "--N-grid", "16", "--t", "2", "--out-dir"])
        .arg(&out)
        .env("QHROM_MAX_LABELS", "50")
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(3), "the environment overrides the label budget");
}

#[test]
fn identical_config_gives_identical_json() {
    let (a, b) = (scratch("det-a"), scratch("det-b"));
    let args = ["attack-demo", "--N-grid", "4,8", "--trials", "200", "--seed", "3"];
    assert_eq!(code(&args, &a), 0);
    assert_eq!(code(&args, &b), 0);
    let read = |d: &PathBuf| std::fs::read(d.join("attack-demo.json")).unwrap();
    assert_eq!(read(&a), read(&b));
}
