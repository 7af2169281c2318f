use std::process::Command;

fn surfnse() -> Command {
    Command::new(env!("CARGO_BIN_EXE_surfnse"))
}

#[test]
fn energy_smoke_run_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = surfnse()
        .args(["energy", "--level", "1", "--tmax", "0.5", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("energy.csv")).unwrap();
    let rows = csv.lines().filter(|l| !l.starts_with('#')).count();
    assert!(rows >= 6, "{csv}");
    assert_eq!(String::from_utf8_lossy(&out.stdout), csv);
}

#[test]
fn convergence_smoke_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = surfnse()
        .args(["convergence", "--levels", "1..2", "--tmax", "0.2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("convergence.csv").exists());
}

#[test]
fn empty_level_range_is_usage_error() {
    let out = surfnse().args(["convergence", "--levels", "3..1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_case_is_usage_error() {
    let out = surfnse().args(["energy", "--case", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn large_level_requires_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let out = surfnse()
        .args(["energy", "--level", "7", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
}
