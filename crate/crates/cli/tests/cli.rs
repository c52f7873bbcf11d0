//! End-to-end tests of the `g2flow` binary: exit codes, output determinism,
//! the CSV header contract, and the error-message taxonomy.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_g2flow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn json_of(out: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout_of(out)).expect("stdout is JSON")
}

fn models_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn temp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("g2flow-test-{}-{name}", std::process::id()))
}

#[test]
fn verify_small_run_passes_and_is_deterministic() {
    let a = run(&["verify", "--count", "3", "--seed", "5"]);
    assert!(a.status.success());
    let table = stdout_of(&a);
    assert!(table.contains("PASS"));
    assert!(!table.contains("FAIL"));
    assert!(table.contains("hodge star involution"));

    let b = run(&["verify", "--count", "3", "--seed", "5"]);
    assert_eq!(a.stdout, b.stdout, "same seed, same bytes");

    let c = run(&["verify", "--count", "3", "--seed", "6"]);
    assert_ne!(a.stdout, c.stdout, "different seed, different worst values");
}

#[test]
fn energy_reports_the_round_point_numbers() {
    let out = run(&["energy", "--start", "1,1"]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["model"], "squashed_s7");
    assert_eq!(v["coefficients"][0], 1.0);
    assert_eq!(v["coefficients"][1], -1.0);
    assert!((v["energy"]["D_nu"].as_f64().unwrap() - 504.0).abs() < 1e-9);
    assert!((v["energy"]["H"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((v["torsion_squares"]["tau0"].as_f64().unwrap() + 12.0).abs() < 1e-9);

    // byte-determinism and --out parity
    let again = run(&["energy", "--start", "1,1"]);
    assert_eq!(out.stdout, again.stdout);
    let path = temp_path("energy.json");
    let to_file = run(&["energy", "--start", "1,1", "--out", path.to_str().unwrap()]);
    assert!(to_file.status.success());
    assert!(to_file.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), out.stdout);
    std::fs::remove_file(&path).ok();
}

#[test]
fn raw_coefficients_agree_with_family_parameters() {
    let by_params = run(&["energy", "--start", "1,1"]);
    let by_coeffs = run(&["energy", "--start", "1,-1", "--raw-coeffs"]);
    assert!(by_coeffs.status.success());
    assert_eq!(by_params.stdout, by_coeffs.stdout);
}

#[test]
fn flow_prints_the_exact_header_and_termination_labels() {
    let out = run(&[
        "flow", "--start", "1.1,0.9", "--t-end", "0.002", "--samples", "4",
    ]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t, c0, c1, D0, D1, D2, D3, D_nu, H, S, C, Ct, Qnorm2, tau0sq, tau1sq, tau2sq, tau3sq, termination"
    );
    let body: Vec<&str> = lines.collect();
    assert!(body.iter().all(|l| l.ends_with("reached_t_end")));
    // forced sample times all present, exactly
    for t in ["0.0005, ", "0.001, ", "0.0015, ", "0.002, "] {
        assert!(
            body.iter().any(|l| l.starts_with(t)),
            "missing forced row {t}"
        );
    }

    let again = run(&[
        "flow", "--start", "1.1,0.9", "--t-end", "0.002", "--samples", "4",
    ]);
    assert_eq!(out.stdout, again.stdout, "trajectories are deterministic");
}

#[test]
fn flow_reports_positivity_loss_past_the_collapse() {
    let out = run(&["flow", "--start", "1,1", "--t-end", "0.2"]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.lines().skip(1).all(|l| l.ends_with("positivity_lost")));
}

#[test]
fn soliton_classifies_the_round_point_as_shrinking() {
    let out = run(&["soliton", "--start", "1,1"]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["classification"], "shrinking");
    assert!((v["mu_hat"].as_f64().unwrap() + 120.0).abs() < 1e-6);
    assert!((v["t_max"].as_f64().unwrap() - 0.0125).abs() < 1e-9);
}

#[test]
fn soliton_rejects_generic_points_with_a_diagnostic() {
    let out = run(&["soliton", "--start", "1.2,0.9"]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["classification"], "not_soliton");
    assert!(v["t_max"].is_null());
    assert!(v["diagnostic"].as_str().unwrap().contains("not collinear"));
}

#[test]
fn critical_converges_to_the_round_point() {
    let out = run(&["critical", "--start", "2,0.5"]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert!((v["params"][0].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert!((v["params"][1].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert!((v["multiplier"].as_f64().unwrap() - 6.0).abs() < 1e-8);
}

#[test]
fn linearize_exports_all_three_operators() {
    for (op, corner, tau0) in [
        ("q", -400.0, -12.0),
        ("soliton", -280.0, -12.0),
        ("p", -280.0, -12.0),
    ] {
        let out = run(&["linearize", "--start", "1,1", "--operator", op]);
        assert!(out.status.success(), "operator {op}");
        let v = json_of(&out);
        assert_eq!(v["schema_version"], 1);
        assert!((v["matrix"][0][0].as_f64().unwrap() - corner).abs() < 1e-6);
        assert!((v["tau0"].as_f64().unwrap() - tau0).abs() < 1e-9);
        assert_eq!(v["basepoint"][0], 1.0);
        assert!((v["gram"][1][1].as_f64().unwrap() - 6.0).abs() < 1e-9);
    }
}

#[test]
fn spectrum_reports_the_invariant_27_eigenvalue_and_trivial_deformations() {
    let out = run(&["spectrum", "--start", "1,1"]);
    assert!(out.status.success());
    let v = json_of(&out);
    let eig = &v["star_d_on_invariant_27"]["eigenvalues"][0];
    assert!((eig[0].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert!(eig[1].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(v["deformations"]["basis"].as_array().unwrap().len(), 0);
    assert_eq!(v["deformations"]["p_kernel_dimension"], 0);
    assert_eq!(v["deformations"]["contained_in_p_kernel"], true);
}

#[test]
fn model_files_load_by_path() {
    let model = models_dir().join("squashed_s7.json");
    let out = run(&[
        "energy",
        "--model",
        model.to_str().unwrap(),
        "--start",
        "1,-1",
    ]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert!((v["energy"]["D_nu"].as_f64().unwrap() - 504.0).abs() < 1e-9);
}

#[test]
fn input_errors_exit_with_code_two_and_distinct_messages() {
    // unreadable model file
    let out = run(&["energy", "--model", "does-not-exist.json", "--start", "1,1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("cannot read model"));

    // malformed JSON
    let bad = temp_path("bad.json");
    std::fs::write(&bad, "{\"coframe\": [").unwrap();
    let out = run(&["energy", "--model", bad.to_str().unwrap(), "--start", "1,1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("malformed model JSON"));
    std::fs::remove_file(&bad).ok();

    // well-formed JSON that fails validation: make the 3-form basis dependent
    let text = std::fs::read_to_string(models_dir().join("squashed_s7.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["inv3_basis"][1] = v["inv3_basis"][0].clone();
    let invalid = temp_path("invalid.json");
    std::fs::write(&invalid, serde_json::to_string(&v).unwrap()).unwrap();
    let out = run(&["energy", "--model", invalid.to_str().unwrap(), "--start", "1,-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("failed validation"));
    std::fs::remove_file(&invalid).ok();

    // start outside the positive cone
    let out = run(&["energy", "--start", "0,0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("invalid start"));

    // wrong weight count
    let out = run(&["energy", "--start", "1,1", "--nu", "1,2,3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("--nu needs 4 entries"));

    // wrong start length
    let out = run(&["energy", "--start", "1,2,3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("accepted lengths"));

    // non-numeric entry
    let out = run(&["energy", "--start", "1,x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("is not a number"));

    // critical needs a parameter family
    let model = models_dir().join("squashed_s7.json");
    let out = run(&[
        "critical",
        "--model",
        model.to_str().unwrap(),
        "--start",
        "2,0.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("no parameter family"));
}

#[test]
fn flat7_accepts_family_and_raw_starts() {
    let out = run(&["energy", "--model", "flat7", "--start", "2"]);
    assert!(out.status.success());
    let v = json_of(&out);
    // 2·Ω₀ is still torsion-free; its volume scales by 2^{7/3}
    assert!(v["energy"]["D_nu"].as_f64().unwrap().abs() < 1e-12);
    let h = v["energy"]["H"].as_f64().unwrap();
    assert!((h - 2.0f64.powf(7.0 / 3.0)).abs() < 1e-9 * h);
}
