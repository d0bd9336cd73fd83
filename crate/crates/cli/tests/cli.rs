//! End-to-end tests of the `distsampler` binary: exit codes, file formats,
//! and seeded reproducibility.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use distsampler_core::linalg::{beamsplitter_50_50, ComplexMatrix};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_distsampler"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(output: &Output) -> serde_json::Value {
    assert!(
        output.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

fn write_beamsplitter(dir: &Path) -> String {
    let path = dir.join("bs.json");
    fs::write(&path, serde_json::to_string(&beamsplitter_50_50()).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn gen_unitary_roundtrip_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("u_a.json");
    let out_b = dir.path().join("u_b.json");
    let result = stdout_json(&run(&[
        "gen-unitary", "--N", "4", "--seed", "9", "--out", out_a.to_str().unwrap(),
    ]));
    assert!(result["unitarity_residual"].as_f64().unwrap() < 1e-12);
    run(&["gen-unitary", "--N", "4", "--seed", "9", "--out", out_b.to_str().unwrap()]);

    let bytes_a = fs::read(&out_a).unwrap();
    let bytes_b = fs::read(&out_b).unwrap();
    assert_eq!(bytes_a, bytes_b, "same seed must give byte-identical payloads");

    let reloaded: ComplexMatrix = serde_json::from_slice(&bytes_a).unwrap();
    assert!(reloaded.unitarity_residual() < 1e-12);

    // manifest sidecar accompanies the data file
    let manifest_path = dir.path().join("u_a.json.manifest.json");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(manifest_path).unwrap()).unwrap();
    assert_eq!(manifest["command"], "gen-unitary");
    assert_eq!(manifest["seed"], 9);
}

#[test]
fn gen_unitary_rejects_zero_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u.json");
    let output = run(&["gen-unitary", "--N", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("invalid dimension"));
}

#[test]
fn prob_on_beamsplitter_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let bs = write_beamsplitter(dir.path());
    let result = stdout_json(&run(&[
        "prob", "--unitary", &bs, "--inputs", "0,1", "--outputs", "0,1", "--x", "0.5",
    ]));
    let p = result["p"].as_f64().unwrap();
    assert!((p - 0.375).abs() < 1e-12, "expected (1-x^2)/2 at x=0.5, got {p}");
}

#[test]
fn prob_truncated_full_order_matches_exact() {
    let dir = tempfile::tempdir().unwrap();
    let u_path = dir.path().join("u.json");
    run(&["gen-unitary", "--N", "8", "--seed", "3", "--out", u_path.to_str().unwrap()]);
    let u = u_path.to_str().unwrap();

    let exact = stdout_json(&run(&[
        "prob", "--unitary", u, "--inputs", "0,1,2,3", "--outputs", "1,3,5,7", "--x", "0.7",
    ]));
    let truncated = stdout_json(&run(&[
        "prob", "--unitary", u, "--inputs", "0,1,2,3", "--outputs", "1,3,5,7", "--x", "0.7",
        "--mode", "truncated", "--k", "4",
    ]));
    let pe = exact["p"].as_f64().unwrap();
    let pt = truncated["p"].as_f64().unwrap();
    assert!((pe - pt).abs() < 1e-10, "exact {pe} vs truncated {pt}");
    // sum over orders of C(4,j)^2 !j: 1 + 36 + 32 + 9
    assert_eq!(truncated["permanents_evaluated"].as_u64().unwrap(), 78);
}

#[test]
fn prob_rejects_overlarge_order() {
    let dir = tempfile::tempdir().unwrap();
    let bs = write_beamsplitter(dir.path());
    let output = run(&[
        "prob", "--unitary", &bs, "--inputs", "0,1", "--outputs", "0,1", "--x", "0.5",
        "--mode", "truncated", "--k", "3",
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn prob_with_general_overlap_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let bs = write_beamsplitter(dir.path());
    let s_path = dir.path().join("s.json");
    fs::write(&s_path, r#"{"n":2,"re":[1.0,0.5,0.5,1.0],"im":[0.0,0.0,0.0,0.0]}"#).unwrap();
    let result = stdout_json(&run(&[
        "prob", "--unitary", &bs, "--inputs", "0,1", "--outputs", "0,1",
        "--s-matrix", s_path.to_str().unwrap(),
    ]));
    // uniform x = 0.5 in Gram form: (1 - 0.25)/2
    assert!((result["p"].as_f64().unwrap() - 0.375).abs() < 1e-12);

    // unphysical overlap matrix is refused
    fs::write(&s_path, r#"{"n":2,"re":[1.0,1.2,1.2,1.0],"im":[0.0,0.0,0.0,0.0]}"#).unwrap();
    let output = run(&[
        "prob", "--unitary", &bs, "--inputs", "0,1", "--outputs", "0,1",
        "--s-matrix", s_path.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn threshold_reports_fifty_photon_budget() {
    let result = stdout_json(&run(&[
        "threshold", "--x", "0.908", "--epsilon", "0.01", "--n", "50", "--N", "100",
    ]));
    assert_eq!(result["budget"]["k_required"].as_u64().unwrap(), 49);
    assert_eq!(result["criteria"]["solid_truncation_below_n"], true);
    let boundary = result["boundary_x_at_k_n_minus_1"].as_f64().unwrap();
    assert!((boundary - 0.908).abs() <= 0.002, "boundary {boundary}");
    assert!(result["budget"]["p0"].as_f64().unwrap() > 0.0);

    let zero = stdout_json(&run(&["threshold", "--x", "0", "--epsilon", "0.1", "--n", "10"]));
    assert_eq!(zero["budget"]["k_required"].as_u64().unwrap(), 0);

    let infeasible = stdout_json(&run(&[
        "threshold", "--x", "0.99", "--epsilon", "0.001", "--n", "50",
    ]));
    assert_eq!(infeasible["criteria"]["solid_truncation_below_n"], false);
}

#[test]
fn figure2_writes_csv_with_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig2.csv");
    let output = run(&[
        "figure2", "--n", "3", "--N", "12", "--trials", "4",
        "--x-grid", "0.5,1.0", "--k-list", "1,2", "--seed", "7",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,k,rms_rel_error,trials"));
    assert_eq!(lines.clone().count(), 4);
    // x = 1.0 rows are present and finite
    assert!(lines.any(|l| l.starts_with("1,")));

    let mirror: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fig2.json")).unwrap()).unwrap();
    assert_eq!(mirror["scan"]["rows"].as_array().unwrap().len(), 4);
    assert_eq!(mirror["manifest"]["command"], "figure2");
}

#[test]
fn figure2_rejects_zero_trials() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig2.csv");
    let output = run(&[
        "figure2", "--n", "3", "--N", "12", "--trials", "0", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn figure3_smoke_has_expected_orders() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig3.csv");
    let output = run(&[
        "figure3", "--n", "3", "--N", "12", "--trials", "2", "--seed", "5",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    let orders: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(orders, vec!["0", "2", "3"]);

    // trials = 1 still runs
    let output = run(&[
        "figure3", "--n", "3", "--N", "12", "--trials", "1", "--out", out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
}

#[test]
fn sample_single_photon_frequencies_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let u_path = dir.path().join("u.json");
    run(&["gen-unitary", "--N", "5", "--seed", "13", "--out", u_path.to_str().unwrap()]);
    let u: ComplexMatrix =
        serde_json::from_str(&fs::read_to_string(&u_path).unwrap()).unwrap();

    let out_a = dir.path().join("a.jsonl");
    let out_b = dir.path().join("b.jsonl");
    let args_tail = [
        "--inputs", "2", "--x", "0.5", "--k", "1", "--count", "20000",
        "--seed", "11", "--burn-in", "100", "--thin", "1",
    ];
    let summary = stdout_json(&run(
        &[&["sample", "--unitary", u_path.to_str().unwrap(), "--out", out_a.to_str().unwrap()], &args_tail[..]].concat(),
    ));
    assert_eq!(summary["samples"].as_u64().unwrap(), 20000);
    run(&[&["sample", "--unitary", u_path.to_str().unwrap(), "--out", out_b.to_str().unwrap()], &args_tail[..]].concat());
    assert_eq!(fs::read(&out_a).unwrap(), fs::read(&out_b).unwrap());

    // frequencies approximate single-photon transmission probabilities
    let mut counts = [0f64; 5];
    for line in fs::read_to_string(&out_a).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        counts[v["outputs"][0].as_u64().unwrap() as usize] += 1.0;
    }
    let total: f64 = counts.iter().sum();
    let mut tvd = 0.0;
    for (out_mode, &c) in counts.iter().enumerate() {
        tvd += 0.5 * (c / total - u.get(out_mode, 2).norm_sqr()).abs();
    }
    assert!(tvd < 0.02, "tvd={tvd}");
}

#[test]
fn sample_rejects_overlarge_order() {
    let dir = tempfile::tempdir().unwrap();
    let bs = write_beamsplitter(dir.path());
    let out = dir.path().join("s.jsonl");
    let output = run(&[
        "sample", "--unitary", &bs, "--inputs", "0,1", "--x", "0.5", "--k", "3",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn oracle_matches_exact_engine_on_beamsplitter() {
    let dir = tempfile::tempdir().unwrap();
    let bs = write_beamsplitter(dir.path());
    let result = stdout_json(&run(&[
        "oracle", "--unitary", &bs, "--inputs", "0,1", "--outputs", "0,1", "--x", "0.5",
    ]));
    assert!((result["p_oracle"].as_f64().unwrap() - 0.375).abs() < 1e-12);
    assert!(result["abs_diff"].as_f64().unwrap() < 1e-12);

    // bunched (collision) outcome: no exact-engine comparison, just the value
    let bunched = stdout_json(&run(&[
        "oracle", "--unitary", &bs, "--inputs", "0,1", "--outputs", "1,1", "--x", "1.0",
    ]));
    assert!((bunched["p_oracle"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!(bunched["p_exact"].is_null());
}

#[test]
fn cost_guard_env_var_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let u_path = dir.path().join("u.json");
    run(&["gen-unitary", "--N", "8", "--seed", "2", "--out", u_path.to_str().unwrap()]);
    let output = bin()
        .args([
            "prob", "--unitary", u_path.to_str().unwrap(), "--inputs", "0,1,2,3",
            "--outputs", "0,1,2,3", "--x", "0.5", "--mode", "truncated", "--k", "4",
        ])
        .env("DISTSAMPLER_MAX_STEPS", "10")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(4), "cost guard should refuse");
}
