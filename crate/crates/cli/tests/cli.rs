//! Exit-code contract and output-file surface of the `curvedio` binary.

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_curvedio");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn write_cfg(dir: &Path, body: &str) -> String {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const BASE: &str = "schema_version = 1\nseed = 42\n\n[curve]\nname = \"parabola\"\n\n[lambda]\nname = \"zero\"\n";

#[test]
fn missing_config_is_usage_error() {
    let out = run(&["divergence"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_config_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "schema_version = \"not a number\"");
    let out = run(&["divergence", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), &format!("{BASE}unknown_key = 1\n"));
    let out = run(&["divergence", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_workers_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), BASE);
    let out = run(&["divergence", "--config", &cfg, "--workers", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_xi_batch_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), &format!("{BASE}\n[construct]\nxi_count = 0\n"));
    let out = run(&["construct", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tiny_budget_exhausts_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), BASE);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "dimension",
        "--config",
        &cfg,
        "--out",
        out_dir.to_str().unwrap(),
        "--budget",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unreachable_coverage_floor_fails_with_reports_written() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        &format!(
            "{BASE}\n[ubiquity]\ncalibration_t = 3\nt_min = 4\nt_max = 5\nsubintervals = 1\nk_min = 1.1\n"
        ),
    );
    let out_dir = dir.path().join("out");
    let out = run(&["ubiquity", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    // criterion failure still leaves the full report behind
    for f in ["ubiquity.csv", "ubiquity.jsonl", "ubiquity.svg"] {
        assert!(out_dir.join(f).is_file(), "{f} missing after exit 1");
    }
}

#[test]
fn dimension_table_carries_formula_targets() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        &format!(
            "{BASE}\n[dimension]\nv_list = [3, 5]\nscale_min = 4\nscale_max = 8\ntolerance = 1.0\nsvolume_t_min = 3\nsvolume_t_max = 5\n"
        ),
    );
    let out_dir = dir.path().join("out");
    let out = run(&["dimension", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("dimension.csv")).unwrap();
    // targets 3/(v+1): 0.75 for v=3, 0.5 for v=5
    assert!(csv.lines().any(|l| l.starts_with("3.00000e0") && l.contains("7.50000e-1")));
    assert!(csv.lines().any(|l| l.starts_with("5.00000e0") && l.contains("5.00000e-1")));
}

#[test]
fn outputs_embed_config_hash_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_body = format!("{BASE}\n[divergence]\ns_list = [0.5]\nv_list = [3]\n");
    let cfg = write_cfg(dir.path(), &cfg_body);
    let out_dir = dir.path().join("out");
    let out = run(&["divergence", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));

    use sha2::{Digest, Sha256};
    let hash = format!("{:x}", Sha256::digest(cfg_body.as_bytes()));
    for f in ["divergence.csv", "divergence.jsonl", "divergence.svg"] {
        let text = std::fs::read_to_string(out_dir.join(f)).unwrap();
        assert!(text.contains(&hash), "{f} lacks the config hash header");
        assert!(text.contains(env!("CARGO_PKG_VERSION")), "{f} lacks the artifact version");
    }
}
