//! Command-line behavior: exit codes, fail-fast validation, determinism of
//! emitted reports, and the checkpoint-driven norm path.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tentflow"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tentflow_cli_{tag}_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read_all_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

#[test]
fn solve_zero_preset_converges_with_exit_zero() {
    let dir = temp_dir("zero");
    let output = bin()
        .args(["solve", "--preset", "zero", "--n", "16"])
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("CONVERGED"), "{stdout}");
    assert!(dir.join("solve_zero.ckpt").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn unknown_preset_and_unknown_id_exit_one() {
    let dir = temp_dir("bad");
    let status = bin()
        .args([
            "solve",
            "--preset",
            "nope",
            "--n",
            "16",
            "--out",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(1));
    let status = bin()
        .args([
            "verify",
            "--id",
            "nope",
            "--n",
            "16",
            "--out",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(1));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_with_unknown_key_fails_fast() {
    let dir = temp_dir("cfg");
    let cfg_path = dir.join("bad.json");
    std::fs::write(&cfg_path, r#"{"mystery": true}"#).unwrap();
    let output = bin()
        .args(["solve", "--config", cfg_path.to_str().unwrap()])
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("mystery") || stderr.contains("unknown"),
        "{stderr}"
    );
    // Nothing was produced.
    assert!(!dir.join("solve_bump.ckpt").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn verify_reports_are_byte_identical_across_runs() {
    let dir_a = temp_dir("det_a");
    let dir_b = temp_dir("det_b");
    for dir in [&dir_a, &dir_b] {
        let output = bin()
            .args(["verify", "--id", "scaling", "--seed", "7", "--n", "32"])
            .args(["--out", dir.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "{}",
            String::from_utf8_lossy(&output.stderr)
        );
    }
    let a = read_all_files(&dir_a);
    let b = read_all_files(&dir_b);
    assert!(!a.is_empty());
    assert_eq!(a, b, "report files differ between identical runs");
    std::fs::remove_dir_all(&dir_a).ok();
    std::fs::remove_dir_all(&dir_b).ok();
}

#[test]
fn norm_command_reads_presets_and_checkpoints() {
    let dir = temp_dir("norm");
    let output = bin()
        .args([
            "norm", "--family", "u_alpha", "--preset", "bump", "--n", "32",
        ])
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("norm_u_alpha.json")).unwrap())
            .unwrap();
    assert!(report["value"].as_f64().unwrap() > 0.0);
    assert_eq!(report["grid_n"].as_u64().unwrap(), 32);

    // Solve, then compute a norm from the emitted checkpoint.
    let output = bin()
        .args(["solve", "--preset", "single_mode", "--n", "16"])
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(output.status.success());
    let ckpt = dir.join("solve_single_mode.ckpt");
    let output = bin()
        .args(["norm", "--family", "bmo_minus1", "--slice", "last"])
        .args(["--input", ckpt.to_str().unwrap()])
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(dir.join("norm_bmo_minus1.json").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn sweep_runs_the_parameter_grid() {
    let dir = temp_dir("sweep");
    let cfg = serde_json::json!({
        "sweep": {
            "alphas": [0.5],
            "eps0s": [0.05, 0.1],
            "ns": [16],
            "preset": "bump",
            "base": {
                "dim": 2, "l": 1.0, "n": 16, "alpha": 0.5, "eps0": 0.05,
                "t_final": 0.1, "time_nodes": 24, "picard_max": 8,
                "picard_tol": 1e-6
            }
        }
    });
    let cfg_path = dir.join("sweep.json");
    std::fs::write(&cfg_path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    let output = bin()
        .args(["sweep", "--config", cfg_path.to_str().unwrap()])
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let summary = std::fs::read_to_string(dir.join("sweep_summary.csv")).unwrap();
    assert!(summary.lines().count() == 3, "{summary}");
    assert!(summary.contains("CONVERGED"));
    std::fs::remove_dir_all(&dir).ok();
}
