use std::path::Path;
use std::process::Command;

use linpencil_cli::{run_convergence, run_factorization_suite, run_subsequence, ExperimentConfig};

const TWO_ATOM: &str = r#"{
    "id": "two",
    "measure": {"kind": "inline", "atoms": [-1, 1], "weights": [0.5, 0.5], "interval": [-1, 1]},
    "nodes": {"kind": "pairs", "pairs": [[0, 1]]},
    "grid": {"kind": "points", "points": [[3, 0], [0, 0]]},
    "orders": [2, 3, 5],
    "factorization": {"points": [[3, 0]], "d0": [[0, 0], [1, 0], [0, 1]]}
}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_linpencil"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn two_atom_converges_exactly_from_order_two() {
    let cfg = ExperimentConfig::from_json(TWO_ATOM).unwrap();
    let rep = run_convergence(&cfg).unwrap();
    assert!(rep.passed());
    for r in rep.records.iter().filter(|r| r.z_re == 3.0) {
        assert!(r.abs_error.unwrap() < 1e-15, "{r:?}");
    }
    // z = 0 sits inside the spectrum interval: reported, never asserted.
    let inside: Vec<_> = rep.records.iter().filter(|r| r.z_re == 0.0).collect();
    assert!(inside
        .iter()
        .all(|r| !r.outside_range && r.flags.contains("inside_range")));
}

#[test]
fn d0_sweep_reconstructs() {
    let cfg = ExperimentConfig::from_json(TWO_ATOM).unwrap();
    let rep = run_factorization_suite(&cfg).unwrap();
    assert!(rep.passed(), "{:?}", rep.records);
    let ul = rep
        .records
        .iter()
        .filter(|r| r.check == "ul_reconstruction")
        .count();
    assert_eq!(ul, 3);
    assert!(rep.records.iter().any(|r| r.check == "ul_lu_reciprocity"));
}

#[test]
fn in_spectrum_pivot_is_a_structured_failure() {
    // q_1 = 2z vanishes at the origin.
    let text = TWO_ATOM.replace(r#""points": [[3, 0]]"#, r#""points": [[0, 0]]"#);
    let cfg = ExperimentConfig::from_json(&text).unwrap();
    let rep = run_factorization_suite(&cfg).unwrap();
    assert!(!rep.passed());
    let lu = rep
        .records
        .iter()
        .find(|r| r.check == "lu_reconstruction")
        .unwrap();
    assert!(!lu.passed && lu.detail.contains("pivot"), "{lu:?}");

    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), &text);
    let out = bin()
        .args(["factor", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let csv = std::fs::read_to_string(dir.path().join("out/two_factor.csv")).unwrap();
    assert!(csv.contains("LU pivot d_1 vanishes"));
}

#[test]
fn subsequence_epsilon_and_u_agree() {
    let text = r#"{
        "id": "sub",
        "measure": {"kind": "uniform", "atoms": 20, "interval": [-1, 1]},
        "nodes": {"kind": "ladder", "count": 24},
        "rows": 24,
        "grid": {"kind": "points", "points": [[2, 1]]},
        "orders": [4, 6, 8, 10, 12],
        "subsequence": {"xi": [2, 1]}
    }"#;
    let rep = run_subsequence(&ExperimentConfig::from_json(text).unwrap()).unwrap();
    assert!(rep.passed(), "{:?}", rep.records);
    for r in &rep.records {
        assert!(r.epsilon.unwrap() <= 1);
        let (a, b) = (r.u_abs.unwrap(), r.u_recurrence.unwrap());
        assert!((a - b).abs() <= 1e-12 * b);
    }
    let sups: Vec<f64> = rep.records.iter().map(|r| r.sup_error.unwrap()).collect();
    assert!(sups.last() < sups.first());
}

#[test]
fn invalid_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), &TWO_ATOM.replace("[2, 3, 5]", "[3, 2]"));
    let out = bin()
        .arg("converge")
        .arg("--config")
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("strictly increasing"));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), TWO_ATOM);
    let out = bin()
        .args(["converge", "--max-order", "3", "--tol", "1e-9", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // Two grid points times orders {2, 3}.
    assert_eq!(summary["records"], 4);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{
        "id": "rand",
        "seed": 17,
        "measure": {"kind": "random", "atoms": 30, "interval": [-1, 1]},
        "nodes": {"kind": "random", "count": 16},
        "grid": {"kind": "rect", "re": [1.5, 3], "im": [0, 1], "re_steps": 3, "im_steps": 2},
        "orders": [2, 4, 8, 12, 15]
    }"#;
    let cfg_path = write_config(dir.path(), text);
    let run = |name: &str, seed: Option<&str>| {
        let out = dir.path().join(name);
        let mut cmd = bin();
        cmd.arg("converge")
            .arg("--config")
            .arg(&cfg_path)
            .arg("--out")
            .arg(&out);
        if let Some(s) = seed {
            cmd.args(["--seed", s]);
        }
        assert!(cmd.output().unwrap().status.success());
        std::fs::read(out.join("rand_converge.csv")).unwrap()
    };
    let a = run("a", None);
    assert_eq!(a, run("b", None));
    assert_ne!(a, run("c", Some("18")));
}
