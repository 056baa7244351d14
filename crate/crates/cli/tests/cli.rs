use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn deepokan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deepokan")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// A tiny orthotropic config written into `dir`.
fn small_config(dir: &Path) -> String {
    let o = deepokan(&["preset", "ortho-low-deepokan"]);
    assert!(o.status.success());
    let text = stdout(&o)
        .replace("epochs = 10000", "epochs = 4")
        .replace("samples = 5000", "samples = 20")
        .replace("mesh = 32", "mesh = 4");
    let path = dir.join("small.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(deepokan(&[]).status.code(), Some(1));
    assert_eq!(deepokan(&["train"]).status.code(), Some(1));
    assert_eq!(deepokan(&["--help"]).status.code(), Some(0));
    let o = deepokan(&["preset", "--list"]);
    assert!(stdout(&o).lines().any(|l| l == "poisson-high-deeponet"));
    assert_eq!(deepokan(&["preset", "nope"]).status.code(), Some(1));
}

#[test]
fn bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[experiment]\nname = \"wave1\"\n").unwrap();
    let o = deepokan(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("run");
    let o = deepokan(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("1260 trainable parameters"));
    for f in ["loss.csv", "errors.csv", "summary.csv", "histogram.csv", "checkpoint.dokn", "config.toml"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert_eq!(fs::read_to_string(out.join("loss.csv")).unwrap().lines().count(), 5);
    let r = deepokan(&["report", "--out", out.to_str().unwrap()]);
    assert!(stdout(&r).contains("epochs recorded: 4"));
}

#[test]
fn generate_train_evaluate_share_a_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("steps");
    let out = out.to_str().unwrap();
    assert!(deepokan(&["generate", "--config", &cfg, "--out", out]).status.success());
    let ds = format!("{out}/dataset.dokn");
    assert!(deepokan(&["train", "--config", &cfg, "--out", out, "--dataset", &ds]).status.success());
    let e = deepokan(&["evaluate", "--config", &cfg, "--out", out, "--dataset", &ds]);
    assert!(e.status.success());
    assert!(stdout(&e).contains("test L2 error"));
    assert_eq!(fs::read_to_string(format!("{out}/errors.csv")).unwrap().lines().count(), 5);
}
