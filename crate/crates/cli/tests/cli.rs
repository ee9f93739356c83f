use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treeshift"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn norm_of_two_branch_shift() {
    let v = json(&["norm", "--k", "3"]);
    assert_eq!(v["k"], 3);
    assert!((num(&v["value"]) - 1.0).abs() < 1e-15);
}

#[test]
fn kary_power_norm() {
    let v = json(&["--tree", "kary:3", "norm", "--k", "4"]);
    assert!((num(&v["value"]) - 3f64.powi(-4)).abs() < 1e-17);
}

#[test]
fn bpe_verdicts_on_either_side_of_the_radius() {
    let v = json(&["bpe", "--at", "0.49", "--at", "0.51", "--at", "0,0.49"]);
    assert!((num(&v["radius"]) - 0.5).abs() < 1e-12);
    let verdicts: Vec<&str> = v["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["verdict"].as_str().unwrap())
        .collect();
    assert_eq!(verdicts, ["inside", "outside", "inside"]);
}

#[test]
fn path_radii_on_kary_tree() {
    let v = json(&["--tree", "kary:3", "--depth", "8", "paths"]);
    let r2 = num(&v["r2_plus"]["estimate"]);
    assert!((r2 - 3f64.powf(-1.5)).abs() < 1e-12, "{r2}");
    assert!(!v["paths"].as_array().unwrap().is_empty());
}

#[test]
fn multiplier_bounds_bracket_the_oracle() {
    let v = json(&[
        "--tree",
        "kary:2",
        "--depth",
        "6",
        "mult",
        "--symbol",
        r#"{"kind":"finite","coeffs":[1,[0.5,0.25],-2]}"#,
    ]);
    let oracle = num(&v["oracle_norm"]);
    assert!(num(&v["lower_bound"]) <= oracle + 1e-12);
    assert!(oracle <= num(&v["sup_norm"]["certified"]) + 1e-9);
    for m in v["coefficient_margins"].as_array().unwrap() {
        assert!(num(&m["margin"]) >= -1e-9);
    }
}

#[test]
fn symbol_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("phi.json");
    fs::write(&path, r#"{"kind":"indicator","n":2}"#).unwrap();
    let v = json(&[
        "--tree",
        "kary:2",
        "--depth",
        "6",
        "mult",
        "--symbol",
        path.to_str().unwrap(),
    ]);
    assert!((num(&v["oracle_norm"]) - 0.25).abs() < 1e-10);
}

#[test]
fn kernel_is_an_adjoint_eigenvector() {
    let v = json(&["kernel", "--at", "0.3", "--at", "0.1,0.2"]);
    for k in v.as_array().unwrap() {
        assert_eq!(k["eigen_ok"], true);
    }
}

#[test]
fn report_lists_inclusions() {
    let v = json(&["--tree", "kary:2", "report"]);
    let kinds: Vec<&str> = v["inclusions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["kind"].as_str().unwrap())
        .collect();
    assert!(kinds.contains(&"kernel-eigenvectors"));
    assert!(kinds.contains(&"bpe-in-point-spectrum"));
}

#[test]
fn verify_passes_on_builtins() {
    for tree in ["t20", "kary:3", "ray"] {
        let v = json(&["--tree", tree, "--depth", "12", "verify"]);
        assert_eq!(v["passed"], true, "{tree}");
        assert_eq!(v["n_failed"], 0);
    }
}

#[test]
fn verify_fails_on_unnormalized_weights() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.json");
    fs::write(
        &path,
        r#"{"beta": {"default": "four_pow_branch2"}, "lambda": {"default": 0.75}}"#,
    )
    .unwrap();
    let out = run(&[
        "--weights",
        path.to_str().unwrap(),
        "--depth",
        "12",
        "verify",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], false);
    let failed: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"child-sum-normalization"), "{failed:?}");
}

#[test]
fn input_errors_exit_with_two() {
    assert_eq!(
        run(&["--tree", "/nonexistent/tree.json", "norm"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        run(&["mult", "--symbol", "{\"kind\":\"finite\",\"coeffs\":[]}"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn tree_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tree.json");
    fs::write(
        &path,
        r#"{"kind":"explicit","depth":2,"edges":[[0,1],[0,2],[1,3],[2,4],[2,5]]}"#,
    )
    .unwrap();
    let v = json(&["--tree", path.to_str().unwrap(), "norm"]);
    assert!(num(&v["value"]) > 0.0);
}

#[test]
fn output_is_deterministic_across_runs_and_threads() {
    let a = run(&["--tree", "kary:3", "--threads", "1", "report"]);
    let b = run(&["--tree", "kary:3", "--threads", "4", "report"]);
    let c = run(&["--tree", "kary:3", "report"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn numbers_use_fixed_scientific_notation() {
    let text = String::from_utf8(run(&["norm"]).stdout).unwrap();
    assert!(text.contains("\"value\": 1.0000000000000000e+0"), "{text}");
}

#[test]
fn csv_output_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bpe.csv");
    let out = run(&["bpe", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = fs::read_to_string(&path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let width = header.split(',').count();
    assert!(width >= 2);
    assert!(lines.all(|l| l.split(',').count() == width));
}
