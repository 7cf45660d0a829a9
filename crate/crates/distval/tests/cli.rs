//! End-to-end checks of the command-line interface: exit codes, report
//! files, error diagnostics, and byte-level determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_distval"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SYM: &str = r#"{
    "distribution": {"dim": 1, "regular": "chi(0,1000000)"},
    "task": {"kind": "sym-value"}
}"#;

#[test]
fn run_writes_all_three_files_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "sc.json", SYM);
    let out_dir = dir.path().join("out");
    let out = bin().args(["run", "--scenario"]).arg(&sc).arg("--out").arg(&out_dir).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert!(report["tool"].as_str().unwrap().starts_with("distval "));
    assert_eq!(report["scenario"]["task"]["kind"], "sym-value");

    let csv = fs::read_to_string(out_dir.join("series.csv")).unwrap();
    assert!(csv.starts_with("param,value,error\n"));
    assert!(csv.lines().count() > 1, "series should carry the eps rows");

    let timing = fs::read_to_string(out_dir.join("timing.json")).unwrap();
    assert!(timing.contains("wall_ms"));
}

#[test]
fn report_bytes_are_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "sc.json", SYM);
    let mut bytes = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        let out =
            bin().args(["run", "--scenario"]).arg(&sc).arg("--out").arg(&out_dir).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        bytes.push(fs::read(out_dir.join("report.json")).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn malformed_json_reports_a_byte_offset() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "sc.json", "{\"distribution\": {\"dim\": 1,, }");
    let out = bin().args(["run", "--scenario"]).arg(&sc).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let msg = stderr(&out);
    assert!(msg.contains("byte offset 27"), "want the offset of the stray comma: {msg}");
}

#[test]
fn unknown_fields_are_named_in_the_error() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(
        dir.path(),
        "sc.json",
        r#"{"distribution": {"dim": 1, "regular": "x", "wobble": 3},
           "task": {"kind": "sym-value"}}"#,
    );
    let out = bin().args(["run", "--scenario"]).arg(&sc).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("wobble"), "{}", stderr(&out));
}

#[test]
fn bad_grammar_points_at_the_regular_field() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(
        dir.path(),
        "sc.json",
        r#"{"distribution": {"dim": 1, "regular": "sin(1/"},
           "task": {"kind": "sym-value"}}"#,
    );
    let out = bin().args(["run", "--scenario"]).arg(&sc).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("distribution.regular"), "{}", stderr(&out));
}

#[test]
fn a_point_mass_diverges_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(
        dir.path(),
        "sc.json",
        r#"{"distribution": {"dim": 1, "regular": "0",
                             "deltas": [{"loc": 0.0, "order": 0, "coef": 1.0}]},
            "task": {"kind": "point-value"}}"#,
    );
    let out = bin().args(["run", "--scenario"]).arg(&sc).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn seed_override_lands_in_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "sc.json", SYM);
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["run", "--seed", "9", "--scenario"])
        .arg(&sc)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 9);
}

#[test]
fn limit_probe_prints_a_report_to_stdout() {
    let out = bin()
        .args(["limit-probe", "--f", "arctan(x)", "--xi", "n", "--a", "1.0", "--a", "2.0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["outcome"]["report"]["constancy"]["Constant"].is_object());
}

#[test]
fn linf_reports_a_bounded_witness_for_sine() {
    let out = bin()
        .args(["linf", "--regular", "sin(x)", "--lo", "0", "--hi", "10", "--budget", "300"])
        .env("DISTVAL_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let norm = report["outcome"]["norm"]["value"].as_f64().unwrap();
    assert!((0.9..=1.0 + 1e-6).contains(&norm), "{norm}");
    assert!(report["outcome"]["report"]["verdict"]["BoundedWitness"].is_object());
}
