use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sshlab_cli::output::{data_section, sidecar_path};

fn sshlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sshlab"))
        .args(args)
        .output()
        .unwrap()
}

fn run_ok(args: &[&str]) {
    let out = sshlab(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap()
}

#[test]
fn rerun_from_result_header_reproduces_data() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.csv");
    let second = dir.path().join("second.csv");
    let f = first.to_str().unwrap();
    run_ok(&[
        "mean-nu",
        "--n",
        "30",
        "--realizations",
        "300",
        "--gamma-grid",
        "0.1,0.45,0.975",
        "--seed",
        "9",
        "--out",
        f,
    ]);
    run_ok(&["mean-nu", "--config", f, "--out", second.to_str().unwrap()]);
    let (a, b) = (read(&first), read(&second));
    assert_eq!(data_section(&a).unwrap(), data_section(&b).unwrap());
    let config = |t: &str, out: &str| t.lines().nth(1).unwrap().replace(out, "OUT");
    assert_eq!(config(&a, f), config(&b, second.to_str().unwrap()));
    assert!(sidecar_path(&first).exists());
}

#[test]
fn json_result_reruns_as_csv() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("a.json");
    let csv = dir.path().join("b.csv");
    run_ok(&[
        "gap-scan",
        "--n",
        "20",
        "--realizations",
        "4",
        "--gamma-grid",
        "0:0.6:3",
        "--format",
        "json",
        "--out",
        json.to_str().unwrap(),
    ]);
    run_ok(&[
        "gap-scan",
        "--config",
        json.to_str().unwrap(),
        "--format",
        "csv",
        "--out",
        csv.to_str().unwrap(),
    ]);
    let doc: serde_json::Value = serde_json::from_str(&read(&json)).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 3);
    let lines: Vec<String> = data_section(&read(&csv))
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    assert_eq!(lines[0], "gamma,mean_gap,gap_stderr,mc_mean_nu");
    for (row, json_row) in lines[1..].iter().zip(doc["rows"].as_array().unwrap()) {
        let gap: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(gap, json_row[1].as_f64().unwrap());
    }
}

#[test]
fn toml_config_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "n = 16\nw = 1.2\nbc = \"periodic\"\ngamma_grid = [0.0, 0.5]\nrealizations = 3\nseed = 5\n",
    )
    .unwrap();
    let out = dir.path().join("inv.csv");
    run_ok(&[
        "invariant",
        "--config",
        cfg.to_str().unwrap(),
        "--realizations",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    let data = data_section(&read(&out)).unwrap();
    let rows: Vec<&str> = data.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    // clean topological chain: every method says 1
    let clean: Vec<&str> = rows[0].split(',').collect();
    assert_eq!((clean[2], clean[3], clean[6]), ("1", "1", "1"));
}

#[test]
fn invalid_input_fails_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = out.to_str().unwrap();
    for args in [
        vec!["mean-nu", "--n", "0", "--out", o],
        vec!["mean-nu", "--realizations", "1", "--out", o],
        vec!["edge-modes", "--gamma-grid", "0:1:x", "--out", o],
        vec!["invariant", "--config", "/nonexistent/run.toml", "--out", o],
    ] {
        let r = sshlab(&args);
        assert!(!r.status.success(), "{args:?} should fail");
        assert!(String::from_utf8_lossy(&r.stderr).contains("error"), "{args:?}");
    }
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "realisations = 4\n").unwrap();
    assert!(
        !sshlab(&["invariant", "--config", bad.to_str().unwrap(), "--out", o])
            .status
            .success()
    );
    assert!(!out.exists());
}

#[test]
fn selftest_passes() {
    let r = sshlab(&["selftest", "--threads", "2"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stdout));
    assert!(!String::from_utf8_lossy(&r.stdout).contains("FAIL"));
}
