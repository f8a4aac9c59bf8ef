use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qaoa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qaoa")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = qaoa(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    qaoa(args).status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn triangle(dir: &Path) -> String {
    write(dir, "k3.txt", "0 1\n1 2\n0 2\n")
}

#[test]
fn simulate_json_result() {
    let dir = tempfile::tempdir().unwrap();
    let g = triangle(dir.path());
    let args = ["simulate", "--problem", "maxcut", "--graph", &g, "--mixer", "x", "--betas", "0", "--gammas", "0.7"];
    let v: Value = serde_json::from_str(&ok(&args)).unwrap();
    assert!((v["exp_value"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    assert!((v["approx_ratio"].as_f64().unwrap() - 0.75).abs() < 1e-12);
    assert_eq!(v["mixer"], "x:1");
    assert_eq!(v["problem"]["n"], 3);
    let argv: Vec<&str> = v["provenance"]["argv"].as_array().unwrap().iter().map(|a| a.as_str().unwrap()).collect();
    assert_eq!(&argv[1..], &args);
}

#[test]
fn simulate_csv_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let g = triangle(dir.path());
    let text = ok(&[
        "simulate", "--problem", "maxcut", "--graph", &g, "--mixer", "x", "--betas=-0.4,1.1", "--gammas", "0.3,-0.8",
        "--format", "csv",
    ]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,bitstring,probability"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 8);
    assert_eq!(rows[3][1], "011");
    let total: f64 = rows.iter().map(|r| r[2].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn usage_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let g = triangle(dir.path());
    let base = ["simulate", "--problem", "maxcut", "--graph", &g, "--betas", "0", "--gammas", "0"];
    assert_eq!(code(&[&base[..], &["--mixer", "clique"]].concat()), 2);
    assert_eq!(code(&[&base[..], &["--mixer", "spin"]].concat()), 2);
    assert_eq!(code(&["simulate", "--problem", "maxcut", "--graph", &g, "--mixer", "x", "--betas", "0"]), 2);
    assert_eq!(code(&["simulate", "--problem", "maxcut", "--mixer", "x", "--betas", "0", "--gammas", "0"]), 2);
    assert_eq!(code(&["simulate", "--problem", "maxcut", "--random-instance", "--n", "4", "--mixer", "x", "--betas", "0", "--gammas", "0"]), 2);
    let bad = write(dir.path(), "bad.txt", "0 x\n");
    assert_eq!(code(&["simulate", "--problem", "maxcut", "--graph", &bad, "--mixer", "x", "--betas", "0", "--gammas", "0"]), 3);
    let loop_edge = write(dir.path(), "loop.txt", "1 1\n");
    assert_eq!(code(&["simulate", "--problem", "maxcut", "--graph", &loop_edge, "--mixer", "x", "--betas", "0", "--gammas", "0"]), 3);
    let short = write(dir.path(), "t.txt", "1 2 3\n");
    assert_eq!(code(&["simulate", "--problem", "table", "--n", "2", "--cost-table", &short, "--mixer", "x", "--betas", "0", "--gammas", "0"]), 3);
    let empty = write(dir.path(), "empty.txt", "");
    assert_eq!(code(&["grover-count", "--problem", "maxcut", "--n", "31", "--graph", &empty, "--out", "h"]), 4);
}

#[test]
fn constrained_problems_and_custom_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let g = triangle(dir.path());
    let v: Value = serde_json::from_str(&ok(&[
        "simulate", "--problem", "dks", "--graph", &g, "--k", "2", "--mixer", "ring", "--betas", "0.5", "--gammas", "0.2",
    ]))
    .unwrap();
    assert!((v["exp_value"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    // Σ X_i on two qubits written out as a matrix matches the built-in mixer.
    let h = write(dir.path(), "h.json", "[[0,1,1,0],[1,0,0,1],[1,0,0,1],[0,1,1,0]]");
    let edge = write(dir.path(), "e.txt", "0 1\n");
    let angles = ["--betas", "0.3,0.9", "--gammas", "1.2,-0.4"];
    let builtin: Value =
        serde_json::from_str(&ok(&[&["simulate", "--problem", "maxcut", "--graph", &edge, "--mixer", "x"], &angles[..]].concat())).unwrap();
    let mixer = format!("custom:{h}");
    let custom: Value =
        serde_json::from_str(&ok(&[&["simulate", "--problem", "maxcut", "--graph", &edge, "--mixer", &mixer], &angles[..]].concat())).unwrap();
    assert!((builtin["exp_value"].as_f64().unwrap() - custom["exp_value"].as_f64().unwrap()).abs() < 1e-12);

    let psi = write(dir.path(), "psi.json", "[0, [0.6, 0], [0, 0.8], 0]");
    let v: Value = serde_json::from_str(&ok(&[
        "simulate", "--problem", "maxcut", "--graph", &edge, "--mixer", "x", "--betas", "0", "--gammas", "0.5", "--initial-state", &psi,
    ]))
    .unwrap();
    assert!((v["exp_value"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let table = write(dir.path(), "c.txt", "# costs\n3 1\n2 0\n");
    let v: Value = serde_json::from_str(&ok(&[
        "simulate", "--problem", "table", "--n", "2", "--cost-table", &table, "--minimize", "--mixer", "grover", "--betas", "0",
        "--gammas", "0",
    ]))
    .unwrap();
    assert!((v["exp_value"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    assert!((v["ground_state_probability"].as_f64().unwrap() - 0.25).abs() < 1e-12);
}

#[test]
fn mixer_cache_is_reused() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("ring.qmix");
    let cache_s = cache.to_str().unwrap();
    let args = [
        "simulate", "--problem", "kvc", "--random-instance", "--seed", "3", "--n", "6", "--k", "3", "--mixer", "ring",
        "--mixer-cache", cache_s, "--betas", "0.4", "--gammas", "0.9",
    ];
    let first: Value = serde_json::from_str(&ok(&args)).unwrap();
    let bytes = std::fs::read(&cache).unwrap();
    let second: Value = serde_json::from_str(&ok(&args)).unwrap();
    assert_eq!(first["exp_value"], second["exp_value"]);
    assert_eq!(std::fs::read(&cache).unwrap(), bytes);

    let mismatch = [
        "simulate", "--problem", "kvc", "--random-instance", "--seed", "3", "--n", "6", "--k", "2", "--mixer", "ring",
        "--mixer-cache", cache_s, "--betas", "0.4", "--gammas", "0.9",
    ];
    assert_eq!(code(&mismatch), 3);
}

#[test]
fn optimize_single_edge() {
    let dir = tempfile::tempdir().unwrap();
    let edge = write(dir.path(), "e.txt", "0 1\n");
    let text = ok(&["optimize", "--problem", "maxcut", "--graph", &edge, "--mixer", "x", "--rounds", "1"]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p,exp_value,approx_ratio"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "1");
    assert!((row[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn optimize_resumes_from_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let common = ["optimize", "--problem", "maxcut", "--random-instance", "--seed", "9", "--n", "6", "--mixer", "x", "--hops", "3"];
    let ck = dir.path().join("run.ckpt");
    let ck_s = ck.to_str().unwrap();
    ok(&[&common[..], &["--rounds", "2", "--checkpoint", ck_s]].concat());
    let early = std::fs::read_to_string(&ck).unwrap();
    let resumed = ok(&[&common[..], &["--rounds", "4", "--checkpoint", ck_s]].concat());
    let late = std::fs::read_to_string(&ck).unwrap();
    assert!(late.starts_with(&early));
    assert_eq!(late.lines().count(), 4);

    let fresh_ck = dir.path().join("fresh.ckpt");
    let fresh = ok(&[&common[..], &["--rounds", "4", "--checkpoint", fresh_ck.to_str().unwrap()]].concat());
    assert_eq!(resumed, fresh);
    assert_eq!(std::fs::read_to_string(&fresh_ck).unwrap(), late);

    let rows: Vec<f64> = fresh.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(rows.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn optimize_other_methods_are_reproducible() {
    let restarts = [
        "optimize", "--problem", "ksat", "--random-instance", "--seed", "4", "--n", "5", "--mixer", "grover", "--rounds", "2",
        "--method", "restarts", "--restarts", "6", "--format", "json",
    ];
    let a: Value = serde_json::from_str(&ok(&restarts)).unwrap();
    let b: Value = serde_json::from_str(&ok(&restarts)).unwrap();
    assert_eq!(a["rounds"], b["rounds"]);
    assert_eq!(a["method"], "restarts");
    assert_eq!(a["rounds"].as_array().unwrap().len(), 2);

    let median = [
        "optimize", "--problem", "maxcut", "--random-instance", "--seed", "4", "--n", "5", "--mixer", "x", "--rounds", "2",
        "--method", "median", "--train-instances", "3", "--hops", "2",
    ];
    let text = ok(&median);
    assert_eq!(text, ok(&median));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn grover_count_histograms() {
    let dir = tempfile::tempdir().unwrap();
    let g = triangle(dir.path());
    let out = dir.path().join("h.txt");
    let stdout = ok(&["grover-count", "--problem", "maxcut", "--graph", &g, "--out", out.to_str().unwrap()]);
    assert_eq!(stdout.trim(), "m=2 total=8");
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "# n=3 k=full total=8\n0\t2\n2\t6\n");

    let (one, eight) = (dir.path().join("1.txt"), dir.path().join("8.txt"));
    for (t, path) in [("1", &one), ("8", &eight)] {
        ok(&[
            "grover-count", "--threads", t, "--problem", "dks", "--random-instance", "--seed", "2", "--n", "14", "--k", "7",
            "--out", path.to_str().unwrap(),
        ]);
    }
    assert_eq!(std::fs::read(&one).unwrap(), std::fs::read(&eight).unwrap());

    let empty = write(dir.path(), "empty.txt", "");
    let big = dir.path().join("26.txt");
    ok(&["grover-count", "--problem", "maxcut", "--n", "26", "--graph", &empty, "--out", big.to_str().unwrap()]);
    assert_eq!(std::fs::read_to_string(&big).unwrap(), "# n=26 k=full total=67108864\n0\t67108864\n");
}
