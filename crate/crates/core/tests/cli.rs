mod common;

use std::process::Command;

use avdecomp::dsl;
use avdecomp::{decompose, make_partition, DecomposeOptions};
use common::*;
use serde_json::Value;

fn avdecomp(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_avdecomp")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn corpus(name: &str) -> String {
    corpus_dir().join(name).to_str().unwrap().to_string()
}

fn json(args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.extend(["--json", "-"]);
    let (code, out, err) = avdecomp(&full);
    assert_eq!(code, 0, "{err}");
    serde_json::from_str(&out).unwrap()
}

#[test]
fn deutsch_const0_report() {
    let v = json(&["decompose", &corpus("deutsch_const0.qc"), "--partition", "singles"]);
    assert!(v["leaves"].as_array().unwrap().len() <= 8);
    assert!(v["reconstruction_residual"].as_f64().unwrap() <= 1e-10);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["circuit"], "deutsch_const0");
}

#[test]
fn whole_partition_has_at_most_two_leaves() {
    for f in corpus_files() {
        let v = json(&["decompose", f.to_str().unwrap(), "--partition", "whole"]);
        assert!(v["leaves"].as_array().unwrap().len() <= 2, "{}", f.display());
    }
}

#[test]
fn recorded_residual_matches_recomputation() {
    let path = corpus("chain4.qc");
    let v = json(&["decompose", &path]);
    let d = dsl::parse(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let built = d.build(&corpus_dir()).unwrap();
    let part = make_partition(&built.sequence, built.partition.as_ref().unwrap()).unwrap();
    let r = decompose(&built.sequence, &part, &built.initial, &DecomposeOptions::default()).unwrap();
    assert_eq!(v["reconstruction_residual"].as_f64().unwrap().to_bits(), r.reconstruction_residual.to_bits());
}

#[test]
fn builtin_grover_marked_probability() {
    let v = json(&["builtin", "grover", "--n", "3", "--marked", "5", "--iters", "2"]);
    let a = &v["basis_amplitudes"]["101"];
    let p = a["re"].as_f64().unwrap().powi(2) + a["im"].as_f64().unwrap().powi(2);
    assert!((p - 121.0 / 128.0).abs() <= 1e-10);
}

#[test]
fn builtin_qpe_point_mass() {
    let v = json(&["builtin", "qpe", "--count", "3", "--phase-k", "5"]);
    let amps = v["basis_amplitudes"].as_object().unwrap();
    assert_eq!(amps.len(), 1);
    let a = &amps["1011"];
    assert!((a["re"].as_f64().unwrap() - 1.0).abs() <= 1e-10);
}

#[test]
fn builtin_deutsch_has_four_gates() {
    let (code, out, _) = avdecomp(&["builtin", "--emit", "deutsch", "--oracle", "const1"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().filter(|l| l.starts_with("gate ")).count(), 4);
}

#[test]
fn builtin_rebase_section() {
    let v = json(&["builtin", "--rebase", "zero", "qpe", "--count", "2", "--phase-k", "1", "--eigenstate", "plus"]);
    let rb = &v["rebase"];
    assert!(rb["cascade"]["reconstruction_residual"].as_f64().unwrap() <= 1e-10);
    assert_eq!(rb["phi"]["basis"], "|000>");
}

#[test]
fn json_file_output_and_text_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.json");
    let (code, text, _) = avdecomp(&["decompose", &corpus("bell.qc"), "--json", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(text.contains("reconstruction residual"));
    let v: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["n_qubits"], 2);
}

#[test]
fn verify_prints_a_table_and_checks_tolerance() {
    let (code, out, _) = avdecomp(&["verify", &corpus("grover_n3_m5.qc")]);
    assert_eq!(code, 0);
    for mode in ["whole", "singles", "(0:1)(2:1)(4:1)(6:1)"] {
        assert!(out.contains(mode), "{out}");
    }
    let (code, _, err) = avdecomp(&["verify", &corpus("chain4.qc"), "--tol", "1e-40"]);
    assert_eq!(code, 3, "{err}");
    let (code, out, _) = avdecomp(&["verify", &corpus("empty_1q.qc")]);
    assert_eq!(code, 0);
    assert!(out.contains(" 0e0 "), "{out}");
}

#[test]
fn parse_errors_exit_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.qc");
    std::fs::write(&bad, "qubits 2\ngate X 5\n").unwrap();
    let (code, _, err) = avdecomp(&["decompose", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains(":2:8:"), "{err}");
    let (code, _, _) = avdecomp(&["decompose", "/definitely/missing.qc"]);
    assert_eq!(code, 2);
    let (code, _, _) = avdecomp(&["decompose", &corpus("bell.qc"), "--partition", "(0:5)"]);
    assert_eq!(code, 2);
}

#[test]
fn selftest_is_reproducible() {
    let a = avdecomp(&["selftest", "--seed", "9", "--cases", "30"]);
    let b = avdecomp(&["selftest", "--seed", "9", "--cases", "30"]);
    assert_eq!(a.0, 0, "{}", a.2);
    assert_eq!(a.1, b.1);
}

#[test]
fn thread_count_does_not_change_output() {
    let one = json(&["decompose", &corpus("chain4.qc"), "--partition", "singles"]);
    let many = json(&["decompose", &corpus("chain4.qc"), "--partition", "singles", "--threads", "0"]);
    assert_eq!(one, many);
}
