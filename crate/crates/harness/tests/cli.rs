use std::process::Command;

use clap::Parser;
use da_harness::cli::{execute, run, Cli};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_da-toolkit"))
}

fn output_of(args: &[&str]) -> String {
    let cli = Cli::try_parse_from(std::iter::once("da-toolkit").chain(args.iter().copied())).unwrap();
    let mut buf = Vec::new();
    execute(&cli, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn accounting_prints_the_swapping_delta() {
    let out = output_of(&["accounting", "--eps", "1", "--n-q", "9"]);
    assert!(out.lines().any(|l| l.starts_with("dp_swapping eps=1") && l.ends_with("delta = 0.874")), "{out}");
    let status = bin().args(["accounting", "--eps", "1", "--n-q", "9"]).output().unwrap();
    assert_eq!(status.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&status.stdout).contains("delta = 0.874"));
}

#[test]
fn exit_codes() {
    assert_eq!(run(["da-toolkit", "release", "--config", "missing.toml"]), 2);
    assert_eq!(run(["da-toolkit", "frobnicate"]), 2);
    assert_eq!(run(["da-toolkit", "sweep", "--axis", "diagonal", "--reps", "1"]), 2);
    let out = bin().args(["release", "--config", "missing.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("blocker");
    std::fs::write(&file, "").unwrap();
    // The output "directory" is a regular file: a runtime failure.
    let out = bin()
        .args(["accounting", "--eps", "1", "--out"])
        .arg(file.join("sub"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn synth_data_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let paths = [dir.path().join("a.csv"), dir.path().join("b.csv")];
    for p in &paths {
        let status = bin()
            .args(["synth-data", "--rows", "1000", "--seed", "7", "--out"])
            .arg(p)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(&paths[0]).unwrap();
    assert_eq!(a, std::fs::read(&paths[1]).unwrap());
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 1001);
}

#[test]
fn release_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        "mechanisms = [\"laplace\", \"dp_swapping\"]\nepsilons = [1.0]\n[data]\nsource = \"synthetic\"\nrows = 300\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .env("DA_TOOLKIT_THREADS", "2")
        .args(["release", "--reps", "3", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(out.join("release.csv")).unwrap();
    assert!(csv.starts_with("mechanism,epsilon,delta,bias_l1,alpha"));
    assert_eq!(csv.lines().count(), 3);
    let acc: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("accounting.json")).unwrap()).unwrap();
    assert_eq!(acc.as_array().unwrap().len(), 2);

    let bad = bin().env("DA_TOOLKIT_THREADS", "zero").args(["accounting"]).status().unwrap();
    assert_eq!(bad.code(), Some(2));
}

#[test]
fn verify_dp_runs_exhaustively() {
    let out = output_of(&["verify-dp", "--mechanism", "dp_swapping", "--eps", "1", "--n", "2", "--max-count", "2"]);
    assert!(out.starts_with("dp_swapping eps=1 delta_hat = 0.000000"), "{out}");
}
