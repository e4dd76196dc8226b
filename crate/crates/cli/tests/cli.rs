use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_contact-penalty"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn coarse_config(dir: &Path) -> String {
    let path = dir.join("coarse.cfg");
    fs::write(&path, "geometry.h = 0.125\nlambdas = 1, 1e-2, 1e-4, 1e-6\nprobes = 8\n").unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn sweep_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = coarse_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        run(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "7"]);
    }
    let csv = fs::read(a.join("sweep.csv")).unwrap();
    assert_eq!(csv, fs::read(b.join("sweep.csv")).unwrap());
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("lambda,"));
    assert_eq!(text.lines().count(), 5);
    assert!(a.join("sweep_report.txt").exists());
}

#[test]
fn signorini_output_passes_its_own_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = coarse_config(dir.path());
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();
    run(&["mesh", "--config", &cfg, "--out", out_s]);
    assert!(fs::read_to_string(out.join("mesh.txt")).unwrap().lines().count() > 1);
    run(&["signorini", "--config", &cfg, "--out", out_s]);
    assert!(out.join("signorini_complementarity.txt").exists());
    let solution = out.join("signorini_displacement.txt");
    let printed = run(&[
        "criterion",
        "--config",
        &cfg,
        "--solution",
        solution.to_str().unwrap(),
        "--probes",
        "4",
    ]);
    assert!(String::from_utf8_lossy(&printed.stdout).contains("eps"));
}

#[test]
fn penalty_writes_a_displacement() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = coarse_config(dir.path());
    let out = dir.path().join("out");
    run(&["penalty", "--lambda", "1e-3", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let text = fs::read_to_string(out.join("penalty_displacement.txt")).unwrap();
    assert!(text.starts_with("displacement v1"));
}

#[test]
fn bad_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    fs::write(&path, "geometry.h = -1\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_contact-penalty"))
        .args(["sweep", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
