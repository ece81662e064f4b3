use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stringfock"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("stringfock-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn spectrum_light_cone_rows() {
    let o = run(&["spectrum", "--gauge", "lc", "--cutoff", "3", "--a", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines, ["level,mass_squared,degeneracy", "0,-2,1", "1,0,24", "2,2,324", "3,4,3200"]);
}

#[test]
fn noghost_at_critical_dimension() {
    let o = run(&["noghost", "--d", "26", "--a", "1", "--max-level", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r["match"] == true));
}

#[test]
fn noghost_above_critical_dimension_fails() {
    let cfg = scratch("d27.cfg");
    std::fs::write(&cfg, "# above critical\nd = 27\na = 1\n").unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "noghost", "--max-level", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["d"], 27);
    assert_eq!(v["rows"][2]["signature"]["negative"], 1);
}

#[test]
fn basis_vacuum_only() {
    let o = run(&["basis", "--directions", "24", "--cutoff", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["total"], 1);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["spectrum", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(run(&["spectrum", "--gauge", "sideways"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
    let cfg = scratch("bad.cfg");
    std::fs::write(&cfg, "colour = 3\n").unwrap();
    assert_eq!(run(&["--config", cfg.to_str().unwrap(), "basis"]).status.code(), Some(2));
}

#[test]
fn checks_pass_at_small_cutoff() {
    assert_eq!(run(&["ccr-check", "--d", "4", "--cutoff", "3"]).status.code(), Some(0));
    let o = run(&["virasoro-check", "--d", "4", "--cutoff", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["central_charge"], "4");
}

#[test]
fn out_file_and_manifest() {
    let out = scratch("spectrum.csv");
    let o = run(&["--out", out.to_str().unwrap(), "spectrum", "--gauge", "lc", "--cutoff", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let manifest = PathBuf::from(format!("{}.manifest.json", out.display()));
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(manifest).unwrap()).unwrap();
    assert_eq!(m["command"], "spectrum");
    assert_eq!(m["passed"], true);
    assert_eq!(m["config"]["level_cutoff"], 2);
    assert_eq!(m["outputs"][0], out.to_str().unwrap());
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert!(m["tool_version"].is_string());
}

#[test]
fn identical_invocations_are_bit_identical() {
    for args in [
        vec!["worldsheet-demo", "--samples", "5"],
        vec!["string-cone", "--h", "0.1", "--T", "1"],
        vec!["pauli-jordan", "--r", "2", "--times", "0.5", "--h", "0.02"],
    ] {
        let a = run(&args);
        let b = bin().args(&args).env("STRINGFOCK_THREADS", "1").output().unwrap();
        let c = run(&[&["--sequential"], args.as_slice()].concat());
        assert_eq!(a.status.code(), Some(0), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(a.stdout, c.stdout, "{args:?}");
    }
}

#[test]
fn floats_carry_seventeen_digits() {
    let o = run(&["pauli-jordan", "--r", "0", "--times", "0.5", "--h", "0.05"]);
    let text = stdout(&o);
    let row = text.lines().nth(1).unwrap();
    for field in row.split(',') {
        let mantissa = field.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.replace('.', "").len(), 17, "{field}");
    }
}

#[test]
fn observable_check_expectations() {
    let spec = scratch("transverse.json");
    std::fs::write(&spec, r#"{"center":[0,0],"radius":[1,1],"internal":[{"coefficient":"1","modes":[[1,2]]}],"expect":true}"#).unwrap();
    assert_eq!(run(&["observable-check", "--cutoff", "1", "--spec", spec.to_str().unwrap()]).status.code(), Some(0));
    let spec = scratch("timelike.json");
    std::fs::write(&spec, r#"{"center":[0,0],"radius":[1,1],"internal":[{"coefficient":"1","modes":[[1,0]]}],"expect":false}"#).unwrap();
    assert_eq!(run(&["observable-check", "--cutoff", "1", "--spec", spec.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(run(&["observable-check", "--spec", "/nonexistent.json"]).status.code(), Some(2));
}

#[test]
fn scans_report_pass() {
    let o = run(&["locality-scan", "--levels", "-2,0", "--h", "0.02"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 1 + 2 * 7);
    assert_eq!(run(&["locality-scan", "--levels", "1"]).status.code(), Some(2));
    assert_eq!(run(&["locality-scan", "--levels", "0", "--separations", "3"]).status.code(), Some(2));
    let o = run(&["field-ccr"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["string-cone", "--N", "1", "--dcm", "2", "--h", "0.1", "--T", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["string-cone", "--h", "0.1", "--courant", "0.9"]);
    assert_eq!(o.status.code(), Some(2));
}
