//! The `qbench` binary: subcommands, exit codes and error messages.

use std::path::Path;
use std::process::{Command, Output};

use qbench_core::bipartite::BipartiteBlockMatrix;
use qbench_core::blocksym::twirl;
use qbench_core::fock::{coherent_state, coherent_vector, fidelity, rotation};
use qbench_core::io::{bipartite_to_json, density_to_json, gram_to_json};
use qbench_core::linalg::c64;

fn qbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbench")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn config_errors_exit_with_a_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{"ensemble": {"M_list": [2, 1]}}"#);
    let o = qbench(&["sweep", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("config /ensemble/M_list/1"), "{}", stderr(&o));

    let o = qbench(&["sweep", "--config", &dir.path().join("missing.json").to_string_lossy()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.json"));
}

#[test]
fn sample_writes_reproducible_csv() {
    let dir = tempfile::tempdir().unwrap();
    let state = write(dir.path(), "s.json", &density_to_json(&coherent_state(c64(0.4, 0.0), 10).unwrap()));
    let a = qbench(&["sample", "--state", &state, "--phases", "0,45", "-n", "50", "--seed", "4"]);
    let b = qbench(&["sample", "--state", &state, "--phases", "0,45", "-n", "50", "--seed", "4"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("phase_deg,value\n"));
    assert_eq!(text.lines().count(), 101);
    assert_eq!(text.lines().filter(|l| l.starts_with("45,")).count(), 50);
    assert!(!text.contains('\r'));
}

#[test]
fn fidelity_of_two_state_files() {
    let dir = tempfile::tempdir().unwrap();
    let (r0, r1) = (coherent_state(c64(0.3, 0.0), 12).unwrap(), coherent_state(c64(-0.3, 0.1), 12).unwrap());
    let a = write(dir.path(), "a.json", &density_to_json(&r0));
    let b = write(dir.path(), "b.json", &density_to_json(&r1));
    let o = qbench(&["fidelity", &a, &b]);
    assert!(o.status.success(), "{}", stderr(&o));
    let f: f64 = stdout(&o).trim().parse().unwrap();
    assert!((f - fidelity(&r0, &r1).unwrap()).abs() < 1e-12);
}

#[test]
fn stdform_check_accepts_symmetric_and_rejects_asymmetric_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let m = 3;
    let v0 = coherent_vector(c64(0.5, 0.1), 6).unwrap();
    let states: Vec<_> = (0..m)
        .map(|k| rotation(2.0 * std::f64::consts::PI * k as f64 / m as f64, 6) * &v0)
        .collect();
    let tau = twirl(&BipartiteBlockMatrix::from_pure_ensemble(&states).unwrap());
    let good = write(dir.path(), "tau.json", &bipartite_to_json(&tau));
    let o = qbench(&["stdform-check", &good]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["passed"], true);
    assert!(report["trace_norm_error"].as_f64().unwrap() <= 1e-9);

    let other = [coherent_vector(c64(0.5, 0.0), 6).unwrap(), coherent_vector(c64(0.0, 0.9), 6).unwrap(), v0];
    let raw = BipartiteBlockMatrix::from_pure_ensemble(&other).unwrap();
    let bad = write(dir.path(), "raw.json", &bipartite_to_json(&raw));
    let o = qbench(&["stdform-check", &bad]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn gram_then_bench_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"seed_state": {"type": "coherent", "alpha": [0.8, 0.0], "dim": 16}, "ensemble": {"M_list": [3]}}"#,
    );
    let out = dir.path().join("grams");
    let o = qbench(&["gram", "--config", &cfg, "--out", &out.to_string_lossy()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    assert!(csv.starts_with("M,purity,purity_upper_bound,input_negativity\n3,"));
    let gram = out.join("gram_M3.json");
    assert!(gram.exists());

    // the identity channel keeps the coherent moments: x = √2·0.8, Var = 1/2
    let x = 2f64.sqrt() * 0.8;
    let moments = format!("{},0,{},0.5", x, x * x + 0.5);
    let gram = gram.to_string_lossy().into_owned();
    let o = qbench(&["bench", "--gram", &gram, "--moments", &moments, "--cutoff", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["verdict"], "quantum_domain");
    assert_eq!(r["M"], 3);

    // a measure-and-prepare output is never certified
    let mp = qbench_core::channels::Channel::HeterodyneMeasurePrepare
        .apply(&coherent_state(c64(0.8, 0.0), 16).unwrap())
        .unwrap();
    let state = write(dir.path(), "mp.json", &density_to_json(&mp));
    let o = qbench(&["bench", "--gram", &gram, "--state", &state, "--cutoff", "10"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let g = qbench_core::gram::GramMatrix::new(nalgebra::DMatrix::identity(2, 2)).unwrap();
    let g2 = write(dir.path(), "g2.json", &gram_to_json(&g));
    let o = qbench(&["bench", "--gram", &g2, "--moments", "0,0,0.5,0.5"]);
    assert_eq!(o.status.code(), Some(2));
}
