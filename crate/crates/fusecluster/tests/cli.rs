//! Black-box tests of the command-line interface: exit codes, output files,
//! and byte-level determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fusecluster"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fusecluster-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn fusecluster")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn gen_mixture(path: &Path, seed: u64) {
    let out = run(&[
        "gen",
        "--kind",
        "gaussian-mixture-2d",
        "--n",
        "60",
        "--seed",
        &seed.to_string(),
        "-o",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "gen failed: {out:?}");
}

#[test]
fn gen_writes_expected_rows_and_is_deterministic() {
    let a = tmp("gen-a.csv");
    let b = tmp("gen-b.csv");
    for p in [&a, &b] {
        let out = run(&["gen", "--kind", "gaussian-grid", "--seed", "3", "-o", p.to_str().unwrap()]);
        assert_eq!(code(&out), 0);
    }
    let ca = fs::read(&a).unwrap();
    assert_eq!(ca.iter().filter(|&&b| b == b'\n').count(), 500);
    assert_eq!(ca, fs::read(&b).unwrap(), "same seed must give identical bytes");
}

#[test]
fn gen_unknown_kind_is_usage_error() {
    let out = run(&["gen", "--kind", "mystery-blobs", "-o", tmp("nope.csv").to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn fit_fcm_writes_json() {
    let data = tmp("fit-data.csv");
    gen_mixture(&data, 1);
    let outp = tmp("fit-out.json");
    let out = run(&[
        "fit",
        data.to_str().unwrap(),
        "--alg",
        "fcm",
        "--k",
        "6",
        "--seed",
        "1",
        "-o",
        outp.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "fit failed: {out:?}");
    let text = fs::read_to_string(&outp).unwrap();
    assert!(text.contains("\"assignment\""), "fit JSON missing assignment");
}

#[test]
fn fit_unknown_algorithm_is_usage_error() {
    let data = tmp("fit-bad-alg.csv");
    gen_mixture(&data, 1);
    let out = run(&["fit", data.to_str().unwrap(), "--alg", "spectral", "--k", "3"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn fit_k_zero_is_usage_error() {
    let data = tmp("fit-bad-k.csv");
    gen_mixture(&data, 1);
    let out = run(&["fit", data.to_str().unwrap(), "--alg", "fcm", "--k", "0"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn path_is_deterministic_and_exports_dot() {
    let data = tmp("path-data.csv");
    gen_mixture(&data, 2);
    let j1 = tmp("path-1.json");
    let j2 = tmp("path-2.json");
    let dot = tmp("path.dot");
    for j in [&j1, &j2] {
        let out = run(&[
            "path",
            data.to_str().unwrap(),
            "--seed",
            "2",
            "--max-levels",
            "30",
            "--stop-at-c",
            "2",
            "--dot",
            dot.to_str().unwrap(),
            "-o",
            j.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "path failed: {out:?}");
    }
    let b1 = fs::read(&j1).unwrap();
    assert_eq!(b1, fs::read(&j2).unwrap(), "identical seeds must give identical JSON");
    let dot_text = fs::read_to_string(&dot).unwrap();
    assert!(dot_text.starts_with("digraph"), "dot export malformed");

    // export subcommand reproduces a DOT file from the JSON
    let dot2 = tmp("path-export.dot");
    let out = run(&[
        "export",
        j1.to_str().unwrap(),
        "--format",
        "dot",
        "-o",
        dot2.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "export failed: {out:?}");
    assert_eq!(dot_text, fs::read_to_string(&dot2).unwrap());
}

#[test]
fn path_without_plateau_is_inconclusive() {
    // A single-level path only ever sees the initial K0-cluster partition,
    // which the plateau rule excludes, so no optimal count can be reported.
    let data = tmp("path-short.csv");
    gen_mixture(&data, 3);
    let out = run(&[
        "path",
        data.to_str().unwrap(),
        "--seed",
        "3",
        "--gamma-start",
        "1e-6",
        "--epsilon",
        "1e-6",
        "--max-levels",
        "1",
        "-o",
        tmp("path-short.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "expected inconclusive exit: {out:?}");
}

#[test]
fn missing_input_file_is_runtime_error() {
    let out = run(&["fit", "/definitely/not/here.csv", "--alg", "fcm", "--k", "2"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn thread_cap_env_is_accepted() {
    let data = tmp("threads-data.csv");
    gen_mixture(&data, 4);
    let out = bin()
        .env("FUSECLUSTER_THREADS", "1")
        .args([
            "fit",
            data.to_str().unwrap(),
            "--alg",
            "kmeans",
            "--k",
            "6",
            "--seed",
            "4",
        ])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "kmeans under FUSECLUSTER_THREADS failed: {out:?}");
}
