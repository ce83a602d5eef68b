use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levinson-ab"))
        .args(args)
        .env_remove("LEVINSON_AB_JOBS")
        .output()
        .expect("spawn")
}

fn json_ok(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value = serde_json::from_slice(&out.stdout).expect("json");
    assert_eq!(v["schema"], 1);
    v
}

#[test]
fn classify_identity_boundary() {
    let v = json_ok(&["classify", "--C", "I", "--D", "0", "--alpha", "0.3"]);
    assert_eq!(v["command"], "classify");
    assert_eq!(v["case"], "I");
}

#[test]
fn classify_from_unitary() {
    let v = json_ok(&["classify", "--U", "-I"]);
    assert_eq!(v["case"], "I");
}

#[test]
fn malformed_matrix_is_input_error() {
    let out = run(&["classify", "--C", "1,2,3", "--D", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad matrix"));
}

#[test]
fn inadmissible_pair_is_input_error() {
    // C = D = 0 has rank 0.
    assert_eq!(run(&["classify", "--C", "0", "--D", "0"]).status.code(), Some(1));
}

#[test]
fn parse_errors_and_help() {
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn spectrum_double_bound_state() {
    let v = json_ok(&["spectrum", "--C", "-I", "--D", "I", "--alpha", "0.5"]);
    let bs = v["bound_states"].as_array().unwrap();
    assert_eq!(bs.len(), 1);
    assert!((bs[0]["z"].as_f64().unwrap() + 1.0).abs() < 1e-10);
    assert_eq!(bs[0]["multiplicity"], 2);
    assert_eq!(v["expected_count"], 2);
}

#[test]
fn smatrix_grid_csv() {
    let out = run(&[
        "--format", "csv", "smatrix", "--C", "0", "--D", "I", "--alpha", "0.5", "--kappa-grid",
        "1e-2:1e2:5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("kappa,s11_re"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 5);
    for r in rows {
        let resid: f64 = r.rsplit(',').next().unwrap().parse().unwrap();
        assert!(resid < 1e-10);
    }
}

#[test]
fn csv_rejected_for_scalar_commands() {
    let out = run(&["--format", "csv", "spectrum", "--C", "-I", "--D", "I"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn levinson_table_suite() {
    let out = run(&["levinson", "--table-suite"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], 35);
    assert_eq!(v["total"], 35);
    assert!(String::from_utf8_lossy(&out.stderr).contains("35/35 pass"));
}

#[test]
fn levinson_random_is_reproducible() {
    let args = ["levinson", "--random", "10", "--seed", "7"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8_lossy(&a.stderr).contains("10/10 pass"));
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["total"], 10);
    assert_eq!(v["checks"], 50);
    assert_eq!(v["checks_passed"], 50);
}

#[test]
fn levinson_emit_edges() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("edges.csv");
    let p = path.to_str().unwrap();
    let v = json_ok(&["levinson", "--C", "0", "--D", "I", "--alpha", "0.5", "--emit-edges", p]);
    assert_eq!(v["holds"], true);
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "edge_id,parameter,g11_re,g11_im,g12_re,g12_im,g21_re,g21_im,g22_re,g22_im,det_phase"
    );
    let edges: std::collections::BTreeSet<_> =
        lines.map(|l| l.split(',').next().unwrap().to_owned()).collect();
    assert_eq!(edges.len(), 4);
}

#[test]
fn chern_methods_agree() {
    let v = json_ok(&["chern", "--l1", "-i", "--l2", "i", "--alpha", "0.5", "--method", "both"]);
    assert_eq!(v["methods_agree"], true);
    assert_eq!(v["value"], 1);
    let v = json_ok(&["chern", "--method", "lattice", "--reverse"]);
    assert_eq!(v["value"], -1);
}

#[test]
fn chern_emit_curvature() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flux.csv");
    json_ok(&["chern", "--method", "lattice", "--emit-curvature", path.to_str().unwrap()]);
    let text = std::fs::read_to_string(&path).unwrap();
    let n = text.lines().count();
    assert_eq!(n, 64 * 64 + 1);
    assert!(text.starts_with("rho,phi,flux"));
}

#[test]
fn chern_rejects_bad_spectrum() {
    assert_eq!(run(&["chern", "--l1", "i", "--l2", "-i"]).status.code(), Some(1));
}

#[test]
fn trace3_small_grid() {
    let v = json_ok(&[
        "trace3", "--l1", "-i", "--l2", "i", "--alpha", "0.5", "--grid", "16x16x4x32", "--no-doubling-check",
    ]);
    let x = v["value"].as_f64().unwrap();
    assert!((x - 1.0).abs() < 0.1, "{x}");
    let r = json_ok(&["trace3", "--grid", "16x16x4x32", "--no-doubling-check", "--reverse"]);
    assert_eq!(r["value"].as_f64().unwrap(), -x);
}

#[test]
fn output_is_independent_of_thread_count() {
    let args = ["chern", "--method", "all"];
    let base = run(&args).stdout;
    for jobs in ["1", "3"] {
        let out = Command::new(env!("CARGO_BIN_EXE_levinson-ab"))
            .args(args)
            .env("LEVINSON_AB_JOBS", jobs)
            .output()
            .unwrap();
        assert_eq!(out.stdout, base, "jobs={jobs}");
    }
}

#[test]
fn output_file_option() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let out = run(&["-o", path.to_str().unwrap(), "classify", "--U", "I"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["command"], "classify");
}

#[test]
fn emit_formats_lists_layouts() {
    let out = run(&["emit-formats"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for key in ["edge_id", "kappa", "flux"] {
        assert!(text.contains(key), "{key}");
    }
}
