//! End-to-end tests of the `advsharp` binary: exit codes, artifact
//! schemas, and byte stability across process reruns.

use std::path::Path;
use std::process::{Command, Output};

fn advsharp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_advsharp"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, out_name: &str) -> std::path::PathBuf {
    let config = format!(
        r#"{{
        "dataset": {{"kind": "synth", "n_per_class": 30, "d": 6, "margin": 0.8, "seed": 7}},
        "grids": [
            {{"kind": "pgd_l2", "epsilon": 0.0, "iterations": 10}},
            {{"kind": "pgd_l2", "epsilon": 0.3, "iterations": 10}}
        ],
        "train": {{"learning_rate": 0.5, "epochs": 60, "record_every": 30}},
        "outputs": "{out_name}",
        "landscape": {{"points": 9, "half_range": 1.0, "direction_seed": 3}}
    }}"#
    );
    let path = dir.join("config.json");
    std::fs::write(&path, config).unwrap();
    path
}

#[test]
fn train_landscape_spectrum_produce_stable_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "out");

    for _ in 0..2 {
        for cmd in ["train", "landscape", "spectrum"] {
            let out = advsharp(&["--config", "config.json", cmd], dir.path());
            assert!(
                out.status.success(),
                "{cmd} failed: {}",
                String::from_utf8_lossy(&out.stderr)
            );
        }
        // snapshot after the first pass
        if !dir.path().join("snapshot").exists() {
            std::fs::create_dir(dir.path().join("snapshot")).unwrap();
            for entry in std::fs::read_dir(dir.path().join("out")).unwrap() {
                let entry = entry.unwrap();
                std::fs::copy(
                    entry.path(),
                    dir.path().join("snapshot").join(entry.file_name()),
                )
                .unwrap();
            }
        }
    }

    let out_dir = dir.path().join("out");
    for name in [
        "accuracy.csv",
        "landscape.csv",
        "landscape_curvature.csv",
        "landscape_pgd_l2.svg",
        "spectrum.csv",
        "ckpt_pgd_l2_0.000000.json",
        "ckpt_pgd_l2_0.300000.json",
    ] {
        let fresh = std::fs::read(out_dir.join(name)).unwrap();
        let snap = std::fs::read(dir.path().join("snapshot").join(name)).unwrap();
        assert_eq!(fresh, snap, "{name} changed between reruns");
    }

    let accuracy = std::fs::read_to_string(out_dir.join("accuracy.csv")).unwrap();
    assert!(accuracy.starts_with("epsilon,norm,kind,train_acc,test_acc,gap\n"));
    assert_eq!(accuracy.lines().count(), 3);

    let spectrum = std::fs::read_to_string(out_dir.join("spectrum.csv")).unwrap();
    assert!(spectrum.starts_with(
        "epsilon,norm,kind,rank,eigenvalue,eigenvalue_times_wnorm,w_norm,train_loss,lanczos_rel_err\n"
    ));

    let svg = std::fs::read_to_string(out_dir.join("landscape_pgd_l2.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<path").count(), 2, "one polyline per epsilon");
}

#[test]
fn missing_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = advsharp(&["train"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
        "dataset": {"kind": "synth", "n_per_class": 5, "d": 4, "margin": 0.5, "seed": 1},
        "grids": [],
        "outputs": "out"
    }"#;
    std::fs::write(dir.path().join("config.json"), config).unwrap();
    let out = advsharp(&["--config", "config.json", "train"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_mnist_files_are_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
        "dataset": {"kind": "mnist2", "data_dir": "no-such-dir"},
        "grids": [{"kind": "none"}],
        "outputs": "out"
    }"#;
    std::fs::write(dir.path().join("config.json"), config).unwrap();
    let out = advsharp(&["--config", "config.json", "train"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn landscape_without_checkpoints_names_the_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "out");
    let out = advsharp(&["--config", "config.json", "landscape"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("missing checkpoint"), "stderr: {stderr}");
    assert!(stderr.contains("epsilon 0"), "stderr: {stderr}");
}

#[test]
fn verify_reports_json_and_supports_only_filter() {
    let dir = tempfile::tempdir().unwrap();
    let out = advsharp(&["verify", "--only", "projector"], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let entry = &report["projector_spectrum"];
    assert_eq!(entry["pass"], serde_json::Value::Bool(true));
    assert!(entry["tolerance"].as_f64().unwrap() > 0.0);
}

#[test]
fn verify_with_unknown_filter_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = advsharp(&["verify", "--only", "no-such-check"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn data_dir_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
        "dataset": {"kind": "mnist2", "data_dir": "original"},
        "grids": [{"kind": "none"}],
        "outputs": "out"
    }"#;
    std::fs::write(dir.path().join("config.json"), config).unwrap();
    let out = advsharp(
        &[
            "--config",
            "config.json",
            "--data-dir",
            "also-missing",
            "train",
        ],
        dir.path(),
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("also-missing"), "stderr: {stderr}");
}
