//! End-to-end checks of the command-line surface and its exit codes.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_curiogrid"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const SMOKE: &str = r#"
[experiment]
master_seed = 5
run_count = 2

[env]
kind = "dense_collect"

[train]
total_env_steps = 1200
checkpoint_interval = 400
actor_count = 4
hidden_sizes = [10]

[treatment.bonus]

[treatment.plain]
train = { use_intrinsic = false, use_compass = false }
"#;

#[test]
fn run_compare_coverage_eval_roundtrip() {
    let dir = tmp("cli_smoke");
    let config = dir.join("plan.toml");
    std::fs::write(&config, SMOKE).unwrap();
    let out = dir.join("out");

    let status = bin().arg("run").arg(&config).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());
    assert!(out.join("resolved.toml").is_file());

    let cmp = bin()
        .arg("compare")
        .arg(out.join("runs/bonus"))
        .arg(out.join("runs/plain"))
        .output()
        .unwrap();
    assert!(cmp.status.success());
    let text = String::from_utf8(cmp.stdout).unwrap();
    assert!(text.starts_with("step,label_a,label_b,U,p,significant\n"));
    assert!(text.contains("bonus,plain"));

    let cov = bin().arg("coverage").arg(&out).output().unwrap();
    assert!(cov.status.success());
    assert!(String::from_utf8(cov.stdout).unwrap().starts_with("treatment,runs,"));

    let dist = bin()
        .arg("eval-dist")
        .arg(out.join("runs/bonus/run_00.params"))
        .arg("dense_collect")
        .arg("6")
        .arg("--hidden")
        .arg("10")
        .output()
        .unwrap();
    assert!(dist.status.success(), "{}", String::from_utf8_lossy(&dist.stderr));
    let text = String::from_utf8(dist.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 6 + 5);
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tmp("cli_badconfig");
    let config = dir.join("plan.toml");
    std::fs::write(&config, "[experiment]\nmaster_seed = 1\n").unwrap();
    let status = bin().arg("run").arg(&config).status().unwrap();
    assert_eq!(status.code(), Some(2));

    // bad env name on eval-dist
    let status = bin()
        .arg("eval-dist")
        .arg(dir.join("nope.params"))
        .arg("pong")
        .arg("3")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // comparing an empty directory
    let status = bin().arg("compare").arg(&dir).arg(&dir).status().unwrap();
    assert_eq!(status.code(), Some(2));
}
