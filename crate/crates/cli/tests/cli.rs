//! End-to-end checks through the compiled binary.

use std::path::Path;
use std::process::{Command, Output};

fn mdcsim(args: &[&str], envs: &[(&str, &str)]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdcsim"))
        .args(args)
        .envs(envs.iter().copied())
        .output()
        .expect("binary runs")
}

#[test]
fn run_preset_writes_outputs_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let result = mdcsim(&["run", "scenario2", "--seed", "7", "--out", out], &[]);
    assert!(
        result.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );
    for name in [
        "queues.csv",
        "psnr.csv",
        "reconstruction.csv",
        "summary.txt",
    ] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("run complete"), "stdout: {stdout}");
}

#[test]
fn missing_config_reports_config_category() {
    let result = mdcsim(&["run", "/nonexistent/config.toml"], &[]);
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("error[config]"), "stderr: {stderr}");
}

#[test]
fn invalid_config_value_reports_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "[mapper]\nqth_low = 45\nqth_high = 40\n").unwrap();
    let result = mdcsim(&["run", config.to_str().unwrap()], &[]);
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("qth_low"), "stderr: {stderr}");
}

#[test]
fn repeated_runs_are_byte_identical_through_the_binary() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [&dir_a, &dir_b] {
        let result = mdcsim(
            &[
                "run",
                "scenario2",
                "--seed",
                "42",
                "--out",
                dir.path().to_str().unwrap(),
            ],
            &[],
        );
        assert!(result.status.success());
    }
    for name in [
        "queues.csv",
        "psnr.csv",
        "summary.txt",
        "reconstruction.csv",
    ] {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs across identical runs");
    }
}

#[test]
fn env_var_overrides_output_dir() {
    let flag_dir = tempfile::tempdir().unwrap();
    let env_dir = tempfile::tempdir().unwrap();
    let result = mdcsim(
        &[
            "run",
            "scenario1",
            "--out",
            flag_dir.path().to_str().unwrap(),
        ],
        &[("MDCSIM_OUT_DIR", env_dir.path().to_str().unwrap())],
    );
    assert!(result.status.success());
    assert!(env_dir.path().join("summary.txt").exists());
    assert!(!flag_dir.path().join("summary.txt").exists());
}

#[test]
fn compare_emits_table_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let result = mdcsim(
        &[
            "compare",
            "scenario2",
            "--mappers",
            "baseline,adaptive",
            "--seeds",
            "1,2",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        &[],
    );
    assert!(
        result.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("baseline") && stdout.contains("adaptive"));
    let csv = std::fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    assert!(csv.starts_with("mapper,seeds,"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn metrics_score_on_identical_frames() {
    let dir = tempfile::tempdir().unwrap();
    let frame: Vec<u8> = (0..64).map(|i| (i * 3) as u8).collect();
    let reference = dir.path().join("ref.yuv");
    let test = dir.path().join("test.yuv");
    // two frames per file
    let mut doubled = frame.clone();
    doubled.extend_from_slice(&frame);
    std::fs::write(&reference, &doubled).unwrap();
    std::fs::write(&test, &doubled).unwrap();
    let result = mdcsim(
        &[
            "metrics",
            "score",
            "--ref",
            reference.to_str().unwrap(),
            "--test",
            test.to_str().unwrap(),
            "--width",
            "8",
            "--height",
            "8",
        ],
        &[],
    );
    assert!(result.status.success());
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("psnr_avg_db=100.0000"), "stdout: {stdout}");
    assert!(stdout.contains("ssim_mean=1.000000"), "stdout: {stdout}");
}

#[test]
fn metrics_score_rejects_partial_frames() {
    let dir = tempfile::tempdir().unwrap();
    let reference = dir.path().join("ref.yuv");
    std::fs::write(&reference, vec![0u8; 63]).unwrap();
    let result = mdcsim(
        &[
            "metrics",
            "score",
            "--ref",
            reference.to_str().unwrap(),
            "--test",
            reference.to_str().unwrap(),
            "--width",
            "8",
            "--height",
            "8",
        ],
        &[],
    );
    assert!(!result.status.success());
}

#[test]
fn gen_trace_output_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.trace");
    let result = mdcsim(
        &[
            "gen-trace",
            "-o",
            path.to_str().unwrap(),
            "--frames",
            "90",
            "--fps",
            "30",
        ],
        &[],
    );
    assert!(result.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let frames = mdcsim_core::trace::parse_trace_str(&text).unwrap();
    assert_eq!(frames.len(), 90);
    assert!(run_on_trace(&path).status.success());
}

fn run_on_trace(trace: &Path) -> Output {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(
        &config,
        format!("[trace]\npath = \"{}\"\n", trace.display()),
    )
    .unwrap();
    mdcsim(
        &[
            "run",
            config.to_str().unwrap(),
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ],
        &[],
    )
}
