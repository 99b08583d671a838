//! CLI integration: artifact layout, reruns byte-identical, exit codes.

use std::fs;
use std::path::Path;
use std::process::Command;

fn spectra() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spectra"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path
}

const SMALL_CFG: &str = r#"{
  "potential": { "generate": { "seed": 7 } },
  "params": { "rho_grid": [20.0], "scan": [0.5, 1.1], "measure_samples": 2000 }
}"#;

#[test]
fn classify_produces_manifest_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_CFG);
    for out in ["a", "b"] {
        let status = spectra()
            .args(["classify", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(tmp.path().join(out))
            .status()
            .unwrap();
        assert!(status.success());
    }
    for name in [
        "classification_rho20.csv",
        "manifest.json",
        "potential.json",
    ] {
        let a = fs::read(tmp.path().join("a").join(name)).unwrap();
        let b = fs::read(tmp.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "artifact {name} differs between identical runs");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("a/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["mode"], "classify");
    assert_eq!(manifest["incomplete"], false);
    // defaults are materialized
    assert_eq!(manifest["config"]["params"]["alpha"], 0.04);
    assert_eq!(manifest["config"]["params"]["n_trunc"], 64);
    let artifacts = manifest["artifacts"].as_array().unwrap();
    assert!(artifacts
        .iter()
        .any(|a| a["path"] == "classification_rho20.csv"));
    for a in artifacts {
        assert_eq!(a["sha256"].as_str().unwrap().len(), 64);
    }
}

#[test]
fn measure_mode_emits_ratio_table() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_CFG);
    let status = spectra()
        .args(["measure", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("m"))
        .args(["--seed", "11"])
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(tmp.path().join("m/measure.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "rho,ratio,accepted,excluded,standard_error,samples,seed"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let ratio: f64 = row[1].parse().unwrap();
    assert!((0.0..=1.0).contains(&ratio));
    assert_eq!(row[6], "11");
}

#[test]
fn solve1d_exports_spectrum() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_CFG);
    let status = spectra()
        .args(["solve1d", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("s"))
        .status()
        .unwrap();
    assert!(status.success());
    let spec: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("s/spectrum1d.json")).unwrap())
            .unwrap();
    assert_eq!(spec["m"], 2);
    assert_eq!(spec["n_trunc"], 64);
    let pairs = spec["pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), 2 * 65);
    // sorted ascending
    let lambdas: Vec<f64> = pairs
        .iter()
        .map(|p| p["lambda"].as_f64().unwrap())
        .collect();
    assert!(lambdas.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn bad_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{ "potential": { "generate": { "seed": 1 } }, "params": { "rho_grid": [] } }"#,
    );
    let status = spectra()
        .args(["classify", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("x"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    // missing file also exits 2
    let status = spectra()
        .args(["classify", "--config"])
        .arg(tmp.path().join("nope.json"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn potential_file_source_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    // generate, then re-run from the materialized potential file
    let cfg = write_config(tmp.path(), SMALL_CFG);
    let status = spectra()
        .args(["solve1d", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("gen"))
        .status()
        .unwrap();
    assert!(status.success());
    let pot_path = tmp.path().join("gen/potential.json");
    let file_cfg = format!(
        r#"{{
  "potential": {{ "file": {{ "path": {} }} }},
  "params": {{ "rho_grid": [20.0] }}
}}"#,
        serde_json::to_string(&pot_path).unwrap()
    );
    let cfg2 = tmp.path().join("config2.json");
    fs::write(&cfg2, file_cfg).unwrap();
    let status = spectra()
        .args(["solve1d", "--config"])
        .arg(&cfg2)
        .arg("--out")
        .arg(tmp.path().join("fromfile"))
        .status()
        .unwrap();
    assert!(status.success());
    let a = fs::read(tmp.path().join("gen/spectrum1d.json")).unwrap();
    let b = fs::read(tmp.path().join("fromfile/spectrum1d.json")).unwrap();
    assert_eq!(
        a, b,
        "file-backed run must reproduce the generated spectrum"
    );
}
