use std::path::Path;
use std::process::{Command, Output};

use censored_gmm::experiment::{generate, run_pipeline, ExperimentConfig, ModelSpec};
use censored_gmm::report::to_json_string;

fn cgmm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cgmm")).args(args).output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

const MODEL: [&str; 14] =
    ["--k", "2", "--weights", "0.3,0.7", "--means", "-2,1", "--R", "3", "--M", "3", "--n", "50000", "--ell", "8"];

#[test]
fn generate_then_estimate_matches_in_process() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("s.txt");
    let result = dir.path().join("r.json");
    let mut gen = MODEL.to_vec();
    gen.extend(["--seed", "4", "--out", path_str(&samples)]);
    let out = cgmm(&[&["generate"][..], &gen].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let est = ["estimate", "--k", "2", "--ell", "8", "--M", "3", "--in", path_str(&samples), "--out", path_str(&result)];
    let out = cgmm(&est);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let config = ExperimentConfig {
        k: 2,
        ell: Some(8),
        r: 3.0,
        m: 3.0,
        n: 50_000,
        seed: 4,
        model: Some(ModelSpec { weights: vec![0.3, 0.7], means: vec![-2.0, 1.0] }),
        ..Default::default()
    };
    let expected = to_json_string(&run_pipeline(&config, &generate(&config).unwrap()).unwrap()).unwrap();
    assert_eq!(std::fs::read_to_string(&result).unwrap(), expected);

    let parsed: serde_json::Value = serde_json::from_str(&expected).unwrap();
    for key in ["weights", "means", "sigma", "k", "ell", "alpha_hat", "moment_estimates", "denoised_moments", "diagnostics", "seed"] {
        assert!(parsed.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run in 0..2 {
        let s = dir.path().join(format!("s{run}.txt"));
        let mut gen = MODEL.to_vec();
        gen.extend(["--seed", "9", "--out", path_str(&s)]);
        assert!(cgmm(&[&["generate"][..], &gen].concat()).status.success());
        let est = cgmm(&["estimate", "--k", "2", "--ell", "8", "--in", path_str(&s)]);
        assert!(est.status.success());
        outputs.push((std::fs::read(&s).unwrap(), est.stdout));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"k": 1, "R": 2, "M": 3, "n": 1000, "seed": 1, "model": {"weights": [1], "means": [0.5]}}"#).unwrap();
    let out = cgmm(&["generate", "--config", path_str(&cfg), "--n", "20"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# n_total=20 seed=1 R=2 sigma=1\n"), "{text}");
    assert_eq!(text.lines().count(), 21);
}

#[test]
fn oracle_estimate_recovers_model() {
    let out = cgmm(&["estimate", "--oracle", "--weights", "0.3,0.7", "--means", "-2,1", "--M", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let means: Vec<f64> = v["means"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((means[0] + 2.0).abs() < 1e-6 && (means[1] - 1.0).abs() < 1e-6);
}

#[test]
fn sweep_writes_csv() {
    let mut args = vec!["sweep", "--vary", "n", "--values", "2000,4000", "--seeds", "2"];
    args.extend(MODEL);
    let out = cgmm(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "n,ell,seed,max_weight_err,max_mean_err,runtime_ms");
    assert_eq!(lines.count(), 4);
}

#[test]
fn exit_codes() {
    assert_eq!(cgmm(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cgmm(&["generate", "--n", "many"]).status.code(), Some(1));
    assert_eq!(cgmm(&["generate", "--k", "0", "--weights", "1", "--means", "0"]).status.code(), Some(1));
    assert_eq!(cgmm(&["estimate", "--k", "1"]).status.code(), Some(1));
    assert_eq!(cgmm(&["generate", "--weights", "0.5,0.5"]).status.code(), Some(1));
    // two coincident atoms cannot be told apart from one
    let degenerate = cgmm(&["estimate", "--oracle", "--weights", "0.5,0.5", "--means", "0.3,0.3", "--M", "1"]);
    assert_eq!(degenerate.status.code(), Some(2), "{}", String::from_utf8_lossy(&degenerate.stderr));
    assert_eq!(cgmm(&["--help"]).status.code(), Some(0));
}

#[test]
fn verify_fast_passes() {
    let out = cgmm(&["verify", "--level", "fast"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], serde_json::Value::Bool(true));
    assert_eq!(v["checks"].as_array().unwrap().len(), 5);
}
