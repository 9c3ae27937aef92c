use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hankel_lab::{Command as Cmd, ResultEnvelope};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hankel-lab"))
        .args(args)
        .env_remove("HANKEL_LAB_WORKERS")
        .output()
        .expect("binary runs")
}

fn envelope(out: &Output) -> ResultEnvelope {
    serde_json::from_slice(&out.stdout).expect("envelope on stdout")
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn selftest_passes() {
    let out = lab(&["selftest"]);
    assert_eq!(out.status.code(), Some(0));
    let env = envelope(&out);
    assert!(env.checks.len() >= 10);
    assert!(env.passed());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(lab(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(lab(&["flatband", "--bogus"]).status.code(), Some(1));
    assert_eq!(lab(&[]).status.code(), Some(1));
    assert_eq!(lab(&["--help"]).status.code(), Some(0));
    assert_eq!(lab(&["--version"]).status.code(), Some(0));
    assert_eq!(lab(&["rkph", "--dist", "uniform:2,1"]).status.code(), Some(1));
}

#[test]
fn flatband_reports_constant_and_fails_an_impossible_tolerance() {
    let out = lab(&["flatband", "--tau", "6.283185307179586"]);
    assert_eq!(out.status.code(), Some(0));
    let env = envelope(&out);
    let estar = env.outputs["estar"].as_f64().unwrap();
    assert!((estar - 0.132_834_987_489_605_46).abs() < 1e-12);
    let out = lab(&["flatband", "--tol", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn measure_files_are_inlined_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"axis\": \"Sigma\"}").unwrap();
    let out = lab(&["ids", "--measure", path_arg(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("measure literal"));

    // two close atoms violate the literal converse Carleson bound
    let pair = dir.path().join("pair.json");
    fs::write(&pair, "{\"axis\": \"Sigma\", \"atoms\": [[0.999, 1.0], [1.0, 1.0]]}").unwrap();
    let out = lab(&["carleson", "--measure", path_arg(&pair)]);
    assert_eq!(out.status.code(), Some(2));
    let env = envelope(&out);
    let failed: Vec<&str> = env.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    assert_eq!(failed, ["carleson_within_local"]);
    let Cmd::Carleson(args) = &env.config.command else { panic!() };
    assert!(args.measure_literal.as_deref().unwrap().contains("0.999"));
}

#[test]
fn resource_caps_exit_one() {
    let out = lab(&["carleman", "--M", "1000", "--dx", "0.01"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("resource cap"));
}

#[test]
fn csv_is_identical_for_any_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let run = |workers: &str, name: &str| {
        let p = dir.path().join(name);
        let out = lab(&["rkph", "--N", "24", "--R", "12", "--seed", "7", "--workers", workers, "--out", path_arg(&p)]);
        assert_eq!(out.status.code(), Some(0));
        fs::read(&p).unwrap()
    };
    let one = run("1", "one.csv");
    assert_eq!(one, run("3", "three.csv"));
    let p = dir.path().join("env.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_hankel-lab"))
        .args(["rkph", "--N", "24", "--R", "12", "--seed", "7", "--out", path_arg(&p)])
        .env("HANKEL_LAB_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(one, fs::read(&p).unwrap());
    assert_ne!(one, run_seed(&dir, "8"));
}

fn run_seed(dir: &tempfile::TempDir, seed: &str) -> Vec<u8> {
    let p = dir.path().join(format!("seed{seed}.csv"));
    let out = lab(&["rkph", "--N", "24", "--R", "12", "--seed", seed, "--out", path_arg(&p)]);
    assert_eq!(out.status.code(), Some(0));
    fs::read(&p).unwrap()
}

#[test]
fn replay_reproduces_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out = lab(&["--save-config", path_arg(&cfg), "bands", "--tau", "3.5", "--k-count", "32"]);
    assert_eq!(out.status.code(), Some(0));
    let first = envelope(&out);
    let again = lab(&["--replay", path_arg(&cfg)]);
    assert_eq!(again.status.code(), Some(0));
    let second = envelope(&again);
    assert_eq!(first.outputs["csv"], second.outputs["csv"]);
    assert_eq!(first.config, second.config);

    // an envelope is a valid replay source too
    let env_file = dir.path().join("envelope.json");
    fs::write(&env_file, &out.stdout).unwrap();
    let third = envelope(&lab(&["--replay", path_arg(&env_file)]));
    assert_eq!(first.outputs["csv"], third.outputs["csv"]);
    assert_eq!(lab(&["--replay", path_arg(&cfg), "selftest"]).status.code(), Some(1));
}

#[test]
fn envelope_round_trips() {
    let out = lab(&["ids", "--model", "lattice", "--scheme", "b", "--M", "60"]);
    assert_eq!(out.status.code(), Some(0));
    let env = envelope(&out);
    let text = serde_json::to_string(&env).unwrap();
    let back: ResultEnvelope = serde_json::from_str(&text).unwrap();
    assert_eq!(env, back);
    let csv = env.outputs["csv"].as_str().unwrap();
    assert!(csv.starts_with("lambda,ids,scheme,M\n"));
    let first = csv.lines().nth(1).unwrap();
    let mantissa = first.split(',').next().unwrap().split('e').next().unwrap();
    assert_eq!(mantissa.trim_start_matches('-').replace('.', "").len(), 17);
}
