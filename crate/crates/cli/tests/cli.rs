use std::process::{Command, Output};

use serde_json::Value;

fn ftqec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ftqec")).args(args).output().expect("run ftqec")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn have_solver() -> bool {
    let solver = std::env::var("FTQEC_SOLVER").unwrap_or_else(|_| "z3".into());
    Command::new(solver).arg("--version").output().is_ok()
}

#[test]
fn list_codes_hides_large_ones() {
    let o = ftqec(&["list-codes"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("color_7_1_3") && out.contains("toric_18_2_3"));
    assert!(!out.contains("rsc_25_1_5"));
    assert!(stdout(&ftqec(&["list-codes", "--large"])).contains("rsc_25_1_5"));
}

#[test]
fn bad_cat_state_is_reported_with_json_witness() {
    if !have_solver() {
        eprintln!("skipping: no solver");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("v.json");
    let o = ftqec(&["verify", "--builtin", "cat4_bad", "--t", "1", "--json", json.to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).contains("verdict: not_fault_tolerant"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["status"], "not_fault_tolerant");
    let c = &v["counterexample"];
    assert_eq!(c["replay_ok"], true);
    assert_eq!(c["exec_faults"], 1);
    assert_eq!(c["output_errors"], serde_json::json!([2]));
}

#[test]
fn json_to_stdout_is_pure_json() {
    if !have_solver() {
        return;
    }
    let o = ftqec(&["verify", "--builtin", "cat4_good", "--t", "1", "--json", "-"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["status"], "fault_tolerant");
    assert_eq!(v["schema_version"], 1);
}

#[test]
fn generated_gadget_verifies_from_file_and_dumps_queries() {
    if !have_solver() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("prep.cqp");
    let dump = dir.path().join("smt");
    let o = ftqec(&["gen-gadget", "prep0", "--code", "rsc_9_1_3", "-o", file.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&file).unwrap();
    assert!(text.contains("rsc_9_1_3"));
    let o = ftqec(&["verify", file.to_str().unwrap(), "--dump-smt", dump.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let dumped: Vec<_> = std::fs::read_dir(&dump).unwrap().collect();
    assert!(!dumped.is_empty());
    let first = dumped[0].as_ref().unwrap().path();
    assert_eq!(first.extension().and_then(|e| e.to_str()), Some("smt2"));
    assert!(std::fs::read_to_string(first).unwrap().contains("(check-sat)"));
}

#[test]
fn oracle_check_agrees_on_cat_states() {
    assert_eq!(code(&ftqec(&["oracle-check", "--builtin", "cat4_bad", "--budget", "1"])), 1);
    assert_eq!(code(&ftqec(&["oracle-check", "--builtin", "cat4_good", "--budget", "1"])), 0);
    let o = ftqec(&["oracle-check", "--builtin", "cat8", "--budget", "2", "--max-runs", "10"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("inconclusive"));
}

#[test]
fn missing_solver_is_inconclusive() {
    let o = ftqec(&["verify", "--builtin", "cat4_good", "--t", "1", "--solver", "/nonexistent/solver"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("inconclusive"));
}

#[test]
fn usage_errors_exit_with_two() {
    let o = ftqec(&["verify", "--builtin", "prep0:rsc_25_1_5"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--large"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cqp");
    std::fs::write(&bad, "qubits 2\nfrobnicate q0\n").unwrap();
    let o = ftqec(&["verify", bad.to_str().unwrap(), "--t", "1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains(bad.file_name().unwrap().to_str().unwrap()));

    assert_eq!(code(&ftqec(&["verify", "--builtin", "nope"])), 2);
}
