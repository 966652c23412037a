use std::path::Path;
use std::process::{Command, Output};

use mcompare::generators;
use mcompare::Chain;
use serde_json::Value;

fn mcompare(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcompare"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn gen_then_mix_two_state() {
    let dir = tempfile::tempdir().unwrap();
    let o = mcompare(dir.path(), &["gen", "two_state", "--delta", "0.1", "-o", "m.json"]);
    assert!(o.status.success());
    let o = mcompare(dir.path(), &["mix", "m.json", "--from", "a", "--eps", "0.25"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("t = 4"), "{}", stdout(&o));

    let o = mcompare(dir.path(), &["mix", "m.json", "--from", "all", "--eps", "0.25", "--continuous", "--json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let closed = 2.0f64.ln() / 1.8;
    assert!((v["time"]["value"].as_f64().unwrap() - closed).abs() < 1e-5);
}

#[test]
fn compare_with_explicit_non_odd_flow() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        ["gen", "two_state", "--delta", "0.1", "-o", "m.json"].as_slice(),
        &["gen", "uniform_walk", "--N", "2", "-o", "u2.json"],
        &["gen", "two_state_flow", "--delta", "0.1", "-o", "f.json"],
    ] {
        assert!(mcompare(dir.path(), args).status.success());
    }
    let o = mcompare(
        dir.path(),
        &["compare", "m.json", "u2.json", "--flow", "f.json", "--from", "a", "--eps", "0.25", "--json"],
    );
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let entries = report["entries"].as_array().unwrap();
    let t8 = entries.iter().find(|e| e["theorem"] == "T8").unwrap();
    assert_eq!(t8["applicable"], false);
    assert_eq!(t8["reason"], "flow is not odd");
    let violated: Vec<&str> = entries
        .iter()
        .filter(|e| e["applicable"] == true && e["holds"] == false)
        .map(|e| e["theorem"].as_str().unwrap())
        .collect();
    // Exact τ_a(M, ¼) = 4 falls below the ⌊1/(2δ)⌋ = 5 lower bound.
    assert_eq!(violated, ["E11"]);
    assert_eq!(report["verdict"], "fail");
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn compare_with_auto_odd_flow_passes() {
    let dir = tempfile::tempdir().unwrap();
    let (base, target) = generators::random_reversible_pair(6, 11).unwrap();
    base.write(dir.path().join("b.json"), None).unwrap();
    target.write(dir.path().join("t.json"), None).unwrap();
    let o = mcompare(
        dir.path(),
        &["compare", "b.json", "t.json", "--auto-flow", "--odd", "--from", "2", "--eps", "0.1", "--delta", "0.05", "--sweep"],
    );
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.contains("T8-sweep"));
    assert!(text.contains("verdict: pass"));
}

#[test]
fn analyze_directed_cycle() {
    let dir = tempfile::tempdir().unwrap();
    assert!(mcompare(dir.path(), &["gen", "directed_cycle", "--k", "3", "-o", "c.json"]).status.success());
    let o = mcompare(dir.path(), &["analyze", "c.json", "--json"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["classification"]["period"], 3);
    assert_eq!(v["classification"]["aperiodic"], false);
    assert_eq!(v["tau_half_e"], Value::Null);
    assert!(v["continuous_tau_half_e"].as_f64().unwrap().is_finite());
    let text = stdout(&mcompare(dir.path(), &["analyze", "c.json"]));
    assert!(text.contains("period: 3"));
}

#[test]
fn round_trip_is_bit_exact_and_records_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = mcompare(dir.path(), &["gen", "random_reversible", "--N", "7", "--seed", "42", "-o", "r.json"]);
    assert!(o.status.success());
    let read = Chain::read(dir.path().join("r.json")).unwrap();
    let direct = generators::random_reversible(7, 42).unwrap();
    assert_eq!(read.p().as_slice(), direct.p().as_slice());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(v["metadata"]["seed"], 42);

    let o = mcompare(dir.path(), &["gen", "lazy_of", "--of", "dhn", "--n", "3"]);
    let lazy = Chain::from_json(&stdout(&o)).unwrap();
    assert_eq!(lazy.p().as_slice(), generators::dhn(3).unwrap().lazy().p().as_slice());
}

#[test]
fn usage_and_input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = mcompare(dir.path(), &["mix", "missing.json", "--eps", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--from"));

    let o = mcompare(dir.path(), &["mix", "missing.json", "--from", "0", "--eps", "0.1"]);
    assert_eq!(o.status.code(), Some(2));

    std::fs::write(dir.path().join("bad.json"), r#"{"name":"x","states":["0","1"],"P":[[0.5,0.6],[0.5,0.5]]}"#).unwrap();
    let o = mcompare(dir.path(), &["analyze", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));

    let o = mcompare(dir.path(), &["gen", "two_state", "--delta", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("delta"));
}

#[test]
fn selftest_reports_each_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = mcompare(dir.path(), &["selftest"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 8, "{text}");
    // The ⌊1/(2δ)⌋ lower bound exceeds the exact mixing time for δ ≥ 0.05,
    // so the first two checks fail and the run exits 1.
    assert!(lines[0].starts_with("FAIL") && lines[1].starts_with("FAIL"), "{text}");
    assert!(lines[2..].iter().all(|l| l.starts_with("PASS")), "{text}");
    assert_eq!(o.status.code(), Some(1));
}
