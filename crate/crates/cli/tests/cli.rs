use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mbs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mbs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SINGLE: &str = r#"{"matroid":{"type":"laminar","bins":[{"members":[0],"capacity":1}]},
"distributions":[[{"value":1,"prob":"1/2"},{"value":0,"prob":"1/2"}]]}"#;

#[test]
fn solve_exact_single_element() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("one.json");
    fs::write(&file, SINGLE).unwrap();
    let out = mbs(&["solve-exact", "--instance", path(&file)]);
    assert!(out.status.success());
    assert_eq!(json_of(&out)["opt"], "1/2");
}

#[test]
fn malformed_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    fs::write(&file, "{not json").unwrap();
    let out = mbs(&["solve-exact", "--instance", path(&file)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed JSON"));
    let out = mbs(&["solve-exact", "--instance", path(&dir.path().join("missing.json"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn state_budget_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("r.json");
    assert!(mbs(&["generate", "random", "--n", "8", "--seed", "1", "--out", path(&file)]).status.success());
    let out = mbs(&["solve-exact", "--instance", path(&file), "--max-states", "2"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn anticoncentration_file_has_five_elements() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("ac.json");
    let out = mbs(&["generate", "anticoncentration", "2", "3", "--out", path(&file)]);
    assert!(out.status.success());
    assert_eq!(json_of(&out)["elements"], 5);
    let solved = mbs(&["solve-exact", "--instance", path(&file)]);
    assert!(json_of(&solved)["opt"].as_str().unwrap().contains('/'));
}

#[test]
fn hardness_of_two_clause_cnf() {
    let dir = tempfile::tempdir().unwrap();
    let cnf = dir.path().join("f.cnf");
    fs::write(&cnf, "c two units\np scnf 2 2 odd-det\n1 0\n2 0\n").unwrap();
    let file = dir.path().join("h.json");
    let out = mbs(&["generate", "hardness", path(&cnf), "1", "--out", path(&file)]);
    assert!(out.status.success());
    let summary = json_of(&out);
    assert_eq!(summary["edges"], 8);
    assert_eq!(summary["vertices"], 5);
    fs::write(&cnf, "p scnf 2 1\n1 5 0\n").unwrap();
    assert_eq!(mbs(&["generate", "hardness", path(&cnf), "1"]).status.code(), Some(2));
}

#[test]
fn random_generation_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for f in [&a, &b] {
        assert!(mbs(&["generate", "random", "--seed", "7", "--out", path(f)]).status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn ptas_exact_mode_matches_opt_when_all_small() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("r.json");
    mbs(&["generate", "random", "--n", "6", "--seed", "7", "--out", path(&file)]);
    let out = mbs(&["ptas", "--instance", path(&file), "--epsilon", "1/10", "--K", "16", "--mode", "exact"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json_of(&out);
    assert_eq!(rep["big_bins"], 0);
    assert!((rep["ratio"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn ptas_report_is_reproducible_and_flags_vacuity() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("r.json");
    mbs(&["generate", "random", "--n", "7", "--seed", "3", "--out", path(&file)]);
    let args = ["ptas", "--instance", path(&file), "--epsilon", "0.5", "--K", "16", "--trials", "5000", "--seed", "9"];
    let first = mbs(&args);
    let second = mbs(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let rep = json_of(&first);
    assert_eq!(rep["guarantee_vacuous"], true);
    assert_eq!(rep["guarantee_factor"], 0.0);
    assert!(rep.get("elapsed_ms").is_none());
}

#[test]
fn ptas_rejects_bad_epsilon_and_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("one.json");
    fs::write(&file, SINGLE).unwrap();
    assert_eq!(mbs(&["ptas", "--instance", path(&file), "--epsilon", "2"]).status.code(), Some(2));
    let g = dir.path().join("g.json");
    mbs(&["generate", "random", "--graphic", "4", "--n", "5", "--out", path(&g)]);
    assert_eq!(mbs(&["ptas", "--instance", path(&g)]).status.code(), Some(2));
}

#[test]
fn verify_properties() {
    let out = mbs(&["verify", "firstuseless", "--count", "20"]);
    assert!(out.status.success());
    assert_eq!(json_of(&out)["pass"], true);
    let out = mbs(&["verify", "concentration", "--count", "20"]);
    assert!(out.status.success());
    let out = mbs(&["verify", "failure-prob"]);
    let rep = json_of(&out);
    assert_eq!(rep["vacuous"], true);
    assert!(out.status.success());
}

#[test]
fn verify_failure_exits_one() {
    // Rule 3 of the reduction does not hold at one clause, so this property reports failures.
    let out = mbs(&["verify", "gain-formula"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_of(&out)["pass"], false);
}
