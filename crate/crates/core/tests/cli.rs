use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use thz_ris::presets;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thz-ris"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path, trials: usize) -> String {
    let mut cfg = presets::preset("default").unwrap();
    cfg.geometry.ris.count = 4;
    cfg.geometry.bs.count = 4;
    cfg.scenario.trials = trials;
    let path = dir.join("small.toml");
    fs::write(&path, cfg.to_toml().unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn corrupted_config(dir: &Path) -> String {
    let text = presets::source("default").unwrap();
    let bad = text.replacen("eps_l = [", "eps_l = [-1.0, ", 1);
    assert_ne!(bad, text);
    let path = dir.join("bad.toml");
    fs::write(&path, bad).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn invalid_ring_weight_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = corrupted_config(dir.path());
    let out = bin(&["simulate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eps_l"));
    let out = bin(&["verify", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn fixed_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 100);
    let a = bin(&["simulate", "--config", &cfg, "--seed", "7"]);
    let b = bin(&["simulate", "--config", &cfg, "--seed", "7", "--workers", "3"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("# schema_version=1\n"));
    assert!(text.contains("seed = 7"));
}

#[test]
fn unknown_link_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 0);
    let out_path = dir.path().join("r.csv");
    let out = bin(&[
        "correlation",
        "--config",
        &cfg,
        "--link",
        "ue_bs",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let out = bin(&[
        "correlation",
        "--config",
        &cfg,
        "--link",
        "bs_ris",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("# schema_version=1\n"));
    assert!(text.contains("link=bs_ris"));
}

#[test]
fn preset_dry_run_and_channel_dump() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 20);
    let out_path = dir.path().join("sweep.csv");
    let out = bin(&[
        "simulate",
        "--config",
        &cfg,
        "--dump-channels",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let channels = fs::read_to_string(dir.path().join("sweep.csv.channels.csv")).unwrap();
    assert!(channels.starts_with("# schema_version=1\n"));
    // 16 kept trials of a 4×4 cascaded channel
    let rows = channels.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 16 * 16);

    let out = bin(&["simulate", "--preset", "identity_sanity", "--ls-only", "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = bin(&["simulate", "--preset", "nonexistent"]);
    assert_eq!(out.status.code(), Some(1));
}
