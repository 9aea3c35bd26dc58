use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn stochdd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stochdd"))
        .args(args)
        .env_remove("SIM_WORKERS")
        .output()
        .expect("binary runs")
}

fn corpus(file: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/qasm_corpus")
        .join(file)
        .display()
        .to_string()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_error(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("an error line");
    serde_json::from_str(line).expect("error is JSON")
}

#[test]
fn noiseless_ghz_only_yields_all_zeros_or_all_ones() {
    let out = stochdd(&[
        "--builtin", "ghz", "--qubits", "2", "--p-depol", "0", "--p-damp", "0", "--p-flip", "0",
        "--shots", "500", "--all-basis", "--fidelity", "--quiet",
    ]);
    let doc = stdout_json(&out);
    let hist = doc["histogram"].as_object().unwrap();
    assert!(hist.keys().all(|k| k == "00" || k == "11"), "{hist:?}");
    assert_eq!(hist.values().map(|v| v.as_u64().unwrap()).sum::<u64>(), 500);
    assert_eq!(doc["M"], 500);
    assert_eq!(doc["error_events"], 0);
    let estimates = doc["estimates"].as_array().unwrap();
    let value = |label: &str| {
        estimates.iter().find(|e| e["label"] == label).unwrap()["value"].as_f64().unwrap()
    };
    assert!((value("P(00)") - 0.5).abs() < 1e-12);
    assert!(value("P(01)").abs() < 1e-12);
    assert!((value("F(ghz_2)") - 1.0).abs() < 1e-12);
}

#[test]
fn default_plan_sizes_the_ensemble_from_eps_and_delta() {
    // No --shots: M follows from L = 1000, eps = 0.01, delta = 0.05. A one-qubit
    // circuit keeps the 26492 runs quick.
    let out = stochdd(&["--builtin", "qft", "--qubits", "1", "--quiet", "--reproducible"]);
    let doc = stdout_json(&out);
    assert_eq!(doc["M"], 26_492);
    assert_eq!(doc["plan"]["L"], 1000);
    let hist = doc["histogram"].as_object().unwrap();
    assert_eq!(hist.values().map(|v| v.as_u64().unwrap()).sum::<u64>(), 26_492);
}

#[test]
fn reproducible_output_is_identical_across_worker_counts() {
    let run = |workers: &str| {
        let out = stochdd(&[
            "--builtin", "ghz", "--qubits", "6", "--shots", "400", "--seed", "11", "--fidelity",
            "--property", "000000", "--workers", workers, "--reproducible", "--quiet",
        ]);
        assert!(out.status.success());
        out.stdout
    };
    let one = run("1");
    assert_eq!(one, run("3"));
    assert_eq!(one, run("8"));
}

#[test]
fn workers_can_come_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_stochdd"))
        .args(["--builtin", "ghz", "--qubits", "3", "--shots", "50", "--quiet"])
        .env("SIM_WORKERS", "3")
        .output()
        .unwrap();
    assert_eq!(stdout_json(&out)["workers"], 3);
}

#[test]
fn csv_output_can_be_written_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("result.csv");
    let out = stochdd(&[
        "--circuit", &corpus("bell.qasm"), "--shots", "200", "--property", "11", "--format", "csv",
        "--out", path.to_str().unwrap(), "--quiet",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("record,key,value,hoeffding_halfwidth,stderr"));
    assert!(text.lines().any(|l| l.starts_with("meta,M,200")));
    assert!(text.lines().any(|l| l.starts_with("estimate,P(11),")));
}

#[test]
fn verify_agrees_on_corpus_programs() {
    for file in ["bell.qasm", "qft3.qasm", "adder.qasm", "nested_macros.qasm"] {
        let doc = stdout_json(&stochdd(&["--circuit", &corpus(file), "--verify", "--quiet"]));
        assert_eq!(doc["agree"], true, "{file}");
        assert!(doc["max_abs_deviation"].as_f64().unwrap() < 1e-8, "{file}");
    }
}

#[test]
fn verify_respects_the_qubit_limit() {
    let out = stochdd(&["--builtin", "ghz", "--qubits", "12", "--verify"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error(&out)["error"]["kind"], "usage");
}

#[test]
fn bad_flags_exit_with_code_two() {
    for args in [
        vec!["--builtin", "ghz"],
        vec!["--builtin", "ghz", "--qubits", "2", "--p-depol", "1.5"],
        vec!["--builtin", "ghz", "--qubits", "2", "--property", "0"],
        vec!["--builtin", "ghz", "--qubits", "2", "--workers", "0"],
        vec!["--builtin", "bogus", "--qubits", "2"],
        vec!["--qubits", "2"],
    ] {
        assert_eq!(stochdd(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn malformed_circuits_exit_with_code_three_and_a_line_number() {
    let out = stochdd(&["--circuit", &corpus("unsupported_if.qasm")]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_error(&out);
    assert_eq!(err["error"]["exit_code"], 3);
    assert!(err["error"]["message"].as_str().unwrap().contains("line 7"), "{err}");

    let out = stochdd(&["--circuit", &corpus("syntax_error.qasm")]);
    assert_eq!(out.status.code(), Some(3));

    let out = stochdd(&["--circuit", "/nonexistent/circuit.qasm"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn runtime_failures_exit_with_code_four() {
    let out = stochdd(&[
        "--builtin", "ghz", "--qubits", "2", "--shots", "10", "--quiet", "--out", "/nonexistent/dir/out.json",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_error(&out)["error"]["kind"], "runtime");
}
