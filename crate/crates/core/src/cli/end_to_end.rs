use std::fs;
use std::path::Path;

use super::main_with_args;
use serde_json::Value;
use sha2::{Digest, Sha256};

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("ladder").chain(args.iter().copied()))
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn manifest_checksums_match_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("kv");
    assert_eq!(run(&["kitaev-validate", "--out", out.to_str().unwrap()]), 0);
    let m = manifest(&out);
    assert_eq!(m["status"], "ok");
    assert_eq!(m["format_version"], 1);
    for rec in m["outputs"].as_array().unwrap() {
        let bytes = fs::read(out.join(rec["file"].as_str().unwrap())).unwrap();
        assert_eq!(rec["sha256"], hex::encode(Sha256::digest(&bytes)));
    }
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        assert_eq!(run(&["rgscan", "--threads", "2", "--out", dir.to_str().unwrap()]), 0);
    }
    assert_eq!(fs::read(a.join("rgscan.csv")).unwrap(), fs::read(b.join("rgscan.csv")).unwrap());
    let header = fs::read_to_string(a.join("rgscan.csv")).unwrap();
    assert!(header.starts_with("U0,alpha,nu,threshold,outcome,l_star,xi_inv,K_minus_bare\n"));
}

#[test]
fn config_file_round_trip_and_threshold_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("rg.toml");
    fs::write(
        &cfg,
        "format_version = 1\nexperiment = \"rgscan\"\n\n[rgscan]\nnu = 0.3333333333333333\ntau = 1.0\nu0 = [-1.0]\nalpha = { start = 0.5, stop = 1.0, points = 6 }\n",
    )
    .unwrap();
    let out = tmp.path().join("o");
    assert_eq!(run(&["rgscan", "--config", cfg.to_str().unwrap(), "--threshold", "4", "--format", "json", "--out", out.to_str().unwrap()]), 0);
    let m = manifest(&out);
    assert_eq!(m["config"]["flow"]["threshold"], 4.0);
    let t: Value = serde_json::from_str(&fs::read_to_string(out.join("rgscan.json")).unwrap()).unwrap();
    assert_eq!(t["rows"].as_array().unwrap().len(), 6);
    assert_eq!(t["format_version"], 1);
}

#[test]
fn bad_config_gives_error_record() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "format_version = 1\n[model]\ntau = 1.0\nu0 = -0.7\nrungs = 2\nspin = 3\n").unwrap();
    let out = tmp.path().join("o");
    assert_eq!(run(&["rabi", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 2);
    let rec: Value = serde_json::from_str(&fs::read_to_string(out.join("error.json")).unwrap()).unwrap();
    assert_eq!(rec["kind"], "config");
    assert!(rec["message"].as_str().unwrap().contains("spin"));
}

#[test]
fn missing_section_and_infeasible_size() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("gaps.toml");
    fs::write(&cfg, "format_version = 1\n[model]\ntau = 1.0\nu0 = -0.7\nrungs = 20\n[hamiltonian]\nkind = \"bare\"\n").unwrap();
    let out = tmp.path().join("o");
    assert_eq!(run(&["gaps", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 2);

    let cfg2 = tmp.path().join("gaps2.toml");
    fs::write(&cfg2, format!("{}[gaps]\nparticles = [20]\n", fs::read_to_string(&cfg).unwrap())).unwrap();
    assert_eq!(run(&["gaps", "--config", cfg2.to_str().unwrap(), "--out", out.to_str().unwrap()]), 1);
    let rec: Value = serde_json::from_str(&fs::read_to_string(out.join("error.json")).unwrap()).unwrap();
    assert_eq!(rec["kind"], "infeasible");
    assert!(rec["message"].as_str().unwrap().contains("estimated dimension"));
}

#[test]
fn selftest_is_green() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s");
    assert_eq!(run(&["selftest", "--out", out.to_str().unwrap()]), 0);
    let csv = fs::read_to_string(out.join("checks.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",1")), "{csv}");
}
