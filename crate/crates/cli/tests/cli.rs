use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn spectra(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spectra")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = path(dir, name);
    std::fs::write(&p, text).unwrap();
    p
}

fn generated(dir: &TempDir, name: &str, args: &[&str]) -> String {
    let p = path(dir, name);
    let mut all = vec!["generate", "--out", &p];
    all.extend_from_slice(args);
    let out = spectra(&all);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    p
}

#[test]
fn lambda_both_reports_agreement() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "f.json", r#"{"p":3,"n":2,"values":[1,1,0,1,0,0,0,0,1]}"#);
    let out = spectra(&["lambda", "--input", &f, "--mode", "both"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let (b, s) = (v["brute"].as_f64().unwrap(), v["spectral"].as_f64().unwrap());
    assert!((b - s).abs() < 1e-12);
    assert!(v["rel_diff"].as_f64().unwrap() < 1e-8);
    let brute_only = json(&spectra(&["lambda", "--input", &f, "--mode", "brute"]));
    assert!(brute_only["spectral"].is_null());
}

#[test]
fn invalid_input_exits_2() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", r#"{"p": 3, "n": 2, "values": [0.1"#);
    let out = spectra(&["lambda", "--input", &bad]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("format error"));

    let out_of_range = write(&dir, "range.json", r#"{"p":3,"n":1,"values":[0,1.5,0]}"#);
    assert_eq!(code(&spectra(&["dft", "--input", &out_of_range])), 2);
    let composite = write(&dir, "composite.json", r#"{"p":4,"n":1,"values":[0,0,0,0]}"#);
    assert_eq!(code(&spectra(&["dft", "--input", &composite])), 2);
    assert_eq!(code(&spectra(&["dft", "--input", &path(&dir, "missing.json")])), 2);
    assert_eq!(code(&spectra(&["frobnicate"])), 2);
    assert_eq!(code(&spectra(&[])), 2);

    let f = write(&dir, "f.json", r#"{"p":3,"n":1,"values":[0,1,0]}"#);
    assert_eq!(code(&spectra(&["dft", "--input", &f, "--p", "5"])), 2);
}

#[test]
fn dft_output_is_a_spectrum_file() {
    let dir = TempDir::new().unwrap();
    let f = generated(&dir, "f.json", &["--p", "5", "--n", "2", "--kind", "bernoulli", "--theta", "0.4", "--seed", "2"]);
    let out = spectra(&["dft", "--input", &f]);
    assert_eq!(code(&out), 0);
    let s = spectra_core::formats::spectrum_from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    let back = spectra_core::transform::idft(&s);
    let original = spectra_core::formats::function_from_json(&std::fs::read_to_string(&f).unwrap()).unwrap();
    for (z, v) in back.values().iter().zip(original.values()) {
        assert!((z.re - v).abs() < 1e-12 && z.im.abs() < 1e-12);
    }
    let csv = spectra(&["dft", "--input", &f, "--format", "csv"]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("index,re,im,mag"));
    assert_eq!(text.lines().count(), 26);
}

#[test]
fn spectrum_reports_order_and_decay() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "f.json", r#"{"p":3,"n":2,"values":[1,1,0,1,1,0,0,0,0]}"#);
    let v = json(&spectra(&["spectrum", "--input", &f, "--delta", "0.2"]));
    assert_eq!(v["perm"][0], 0);
    assert_eq!(v["perm"].as_array().unwrap().len(), 9);
    assert!(v["violations"].as_array().unwrap().is_empty());
    assert_eq!(v["decay"][0]["holds"], true);
    let csv = spectra(&["spectrum", "--input", &f, "--top", "3", "--format", "csv"]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("rank,point,mag,log_mag,log_bound,holds"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn dichotomy_exit_codes() {
    let dir = TempDir::new().unwrap();
    let f = generated(&dir, "f.json", &["--p", "3", "--n", "4", "--kind", "bernoulli", "--theta", "0.15", "--seed", "3"]);
    let out = spectra(&["dichotomy", "--input", &f, "--ell", "2", "--b", "2"]);
    let v = json(&out);
    let expected = match v["tag"].as_str().unwrap() {
        "LambdaLarge" | "OverlapFound" => 0,
        "HypothesisFail" => 3,
        _ => 4,
    };
    assert_eq!(code(&out), expected);
    assert_ne!(expected, 4);
    // θ ≥ 1/4 is outside the statement.
    let dense = write(&dir, "dense.json", r#"{"p":3,"n":2,"values":[1,1,0,1,1,0,0,0,0]}"#);
    assert_eq!(code(&spectra(&["dichotomy", "--input", &dense, "--ell", "1", "--b", "2"])), 2);
}

#[test]
fn collapse_modes() {
    let dir = TempDir::new().unwrap();
    let f = generated(&dir, "f.json", &["--p", "3", "--n", "4", "--kind", "bernoulli", "--theta", "0.3", "--seed", "4"]);
    let slice = json(&spectra(&["collapse", "--input", &f, "--mode", "slice", "--t", "5"]));
    assert!(slice["theta_after"].as_f64().unwrap() >= slice["theta_before"].as_f64().unwrap() - 1e-12);
    assert_eq!(slice["function"]["n"], 3);
    let smooth = json(&spectra(&["collapse", "--input", &f, "--mode", "smooth", "--dim", "2", "--j", "3"]));
    assert!(smooth["decomposition"]["telescoping_residue"].as_f64().unwrap() < 1e-8);
    let span = json(&spectra(&["collapse", "--input", &f, "--mode", "span", "--j", "3"]));
    assert!(span["report"]["bound"].is_number());
    assert_eq!(code(&spectra(&["collapse", "--input", &f, "--mode", "slice"])), 2);
    assert_eq!(code(&spectra(&["collapse", "--input", &f, "--mode", "slice", "--t", "0"])), 2);
}

#[test]
fn sampler_avoids_b() {
    let out = spectra(&["sample-subspace", "--p", "3", "--n", "8", "--points", "1,5,77,400", "--samples", "20", "--seed", "9"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let f = spectra_core::FieldParams::new(3, 8).unwrap();
    let b = spectra_core::collapse::avoidance_set(f, &[1, 5, 77, 400]).unwrap();
    assert_eq!(v["avoidance_size"], b.len());
    for s in v["samples"].as_array().unwrap() {
        let basis: Vec<usize> = s["basis"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap() as usize).collect();
        let sub = spectra_core::subspace::span_indices(f, &basis).unwrap();
        assert_eq!(sub.dim(), 6);
        assert!(b.iter().all(|&x| !sub.contains_idx(x)));
    }
    // 2·1 + 1 = 0: every subspace meets B.
    assert_eq!(code(&spectra(&["sample-subspace", "--p", "3", "--n", "4", "--points", "1,1"])), 3);
}

#[test]
fn iterate_writes_a_trace() {
    let dir = TempDir::new().unwrap();
    let f = generated(&dir, "f.json", &["--p", "3", "--n", "5", "--kind", "bernoulli", "--theta", "0.2", "--seed", "1"]);
    let trace = path(&dir, "trace.jsonl");
    let report = path(&dir, "full.json");
    let out = spectra(&[
        "iterate", "--input", &f, "--j", "12", "--delta", "0.3", "--j0", "256", "--budget", "100000", "--out", &trace,
        "--report", &report,
    ]);
    assert!(matches!(code(&out), 0 | 3), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&trace).unwrap();
    assert!(!text.is_empty());
    for line in text.lines() {
        let row: Value = serde_json::from_str(line).unwrap();
        for key in ["t", "case", "j", "delta", "n", "inv", "numerics", "flags"] {
            assert!(row.get(key).is_some(), "missing {key}");
        }
        assert!(row["inv"]["inv0"].is_boolean());
    }
    let full: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(full["log_base"], "natural");
    assert!(full["terminal"].is_string());

    let desk = spectra(&["iterate", "--input", &f, "--j", "12", "--delta", "0.3", "--desk", "--format", "csv"]);
    let csv = String::from_utf8(desk.stdout).unwrap();
    assert!(csv.starts_with("t,case,j,delta,n,inv0"));
    assert_eq!(code(&spectra(&["iterate", "--input", &f, "--j", "1", "--delta", "0.3"])), 2);
}

#[test]
fn generate_and_hunt_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = generated(&dir, "a.json", &["--p", "3", "--n", "4", "--kind", "coset-union", "--dim", "2", "--cosets", "3", "--seed", "7"]);
    let b = generated(&dir, "b.json", &["--p", "3", "--n", "4", "--kind", "coset-union", "--dim", "2", "--cosets", "3", "--seed", "7"]);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());

    let hunt = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_spectra"))
            .env("SPECTRA_THREADS", threads)
            .args(["hunt", "--p", "3", "--n", "3", "--conjecture", "c2", "--kind", "planted-3ap-free", "--shuffle"])
            .args(["--trials", "12", "--seed", "5"])
            .output()
            .unwrap()
    };
    let (one, four) = (hunt("1"), hunt("4"));
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, four.stdout);
    let reports: Value = serde_json::from_slice(&one.stdout).unwrap();
    for r in reports.as_array().unwrap() {
        assert_eq!(r["ap_free"], true);
        assert!(r["disclaimer"].is_string());
    }
    assert_eq!(code(&spectra(&["generate", "--kind", "bernoulli", "--theta", "0.2"])), 2);
    assert_eq!(code(&spectra(&["generate", "--p", "3", "--n", "2", "--kind", "planted-3ap-free", "--theta", "0.9"])), 3);
}

#[test]
fn hunt_csv_has_one_row_per_instance_and_rank() {
    let out = spectra(&[
        "hunt", "--p", "3", "--n", "3", "--conjecture", "c1", "--kind", "bernoulli", "--theta", "0.3", "--trials", "4",
        "--j-grid", "2,3,5", "--format", "csv",
    ]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("conjecture,trial,seed,p,n,j,"));
    assert_eq!(text.lines().count(), 1 + 4 * 3);
}

#[test]
fn verify_suites() {
    let dir = TempDir::new().unwrap();
    let out_path = path(&dir, "verify.json");
    let out = spectra(&["verify", "--suite", "identities", "--p", "3", "--n", "4", "--out", &out_path]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let results: Value = serde_json::from_str(&std::fs::read_to_string(Path::new(&out_path)).unwrap()).unwrap();
    assert!(results.as_array().unwrap().iter().all(|r| r["pass"] == true));
    assert_eq!(code(&spectra(&["verify", "--suite", "driver"])), 0);
    // The update-rule and termination criteria are known to fail.
    let arithmetic = spectra(&["verify", "--suite", "arithmetic", "--format", "csv"]);
    assert_eq!(code(&arithmetic), 4);
    assert!(String::from_utf8(arithmetic.stdout).unwrap().starts_with("id,name,pass,detail"));
}
