use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn twinlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twinlab")).args(args).env_remove("TWINLAB_OUTPUT_DIR").output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("experiment.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const LAMINATE: &str = r#"
kind = "laminate"
eta_sweep = [1e-3, 5e-4]

[analyses]
energy = true
besov = true

[laminate]
variant_pair = [1, 2]
normal = "3+"
fraction = 0.5
period = 0.125
resolution = [64, 8, 8]

[besov]
component = 1
"#;

#[test]
fn laminate_run_writes_reports_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), LAMINATE);
    let out = dir.path().join("out");
    let o = twinlab(&["run", &cfg, "--output-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));

    let besov = std::fs::read_to_string(out.join("besov_report.csv")).unwrap();
    assert!(besov.starts_with("# twinlab besov v1\n"));
    let energy = std::fs::read_to_string(out.join("energy.csv")).unwrap();
    assert_eq!(energy.lines().count(), 4);

    let summary: Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["kind"], "laminate");
    assert!(summary["besov"].is_object());

    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let files: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|f| f["file"].as_str().unwrap()).collect();
    assert!(files.contains(&"besov_report.csv") && files.contains(&"summary.json"));
    assert!(manifest["failures"].as_array().unwrap().is_empty());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), LAMINATE);
    let digests = |name: &str| {
        let out = dir.path().join(name);
        assert!(twinlab(&["run", &cfg, "--output-dir", out.to_str().unwrap()]).status.success());
        let m: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        m["outputs"].as_array().unwrap().iter().map(|f| (f["file"].clone(), f["sha256"].clone())).collect::<Vec<_>>()
    };
    assert_eq!(digests("a"), digests("b"));
}

#[test]
fn output_dir_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), LAMINATE);
    let out = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_twinlab"))
        .args(["run", &cfg])
        .env("TWINLAB_OUTPUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("manifest.json").exists());
}

#[test]
fn unresolved_tree_is_rejected_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
kind = "branch"
eta_sweep = [1e-3]
output_dir = "never"

[branch]
depth = 8
base_period = 0.25
resolution = [64, 64]
"#,
    );
    let o = Command::new(env!("CARGO_BIN_EXE_twinlab")).current_dir(dir.path()).args(["run", &cfg]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("resolution too small"), "{}", stderr(&o));
    assert!(!dir.path().join("never").exists());
}

#[test]
fn verify_lists_nothing_for_a_valid_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = twinlab(&["verify", &write_config(dir.path(), LAMINATE)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v, serde_json::json!([]));
}

fn violations(text: &str) -> Vec<(String, String)> {
    let dir = tempfile::tempdir().unwrap();
    let o = twinlab(&["verify", &write_config(dir.path(), text)]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stdout));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| (x["field"].as_str().unwrap().into(), x["message"].as_str().unwrap().into()))
        .collect()
}

#[test]
fn verify_reports_the_margin_condition() {
    let text = LAMINATE.replace("component = 1", "component = 1\nh_values = [0.3, 0.15, 0.075, 0.0375]");
    let v = violations(&text);
    assert!(v.iter().any(|(f, m)| f == "besov.h_values" && m.contains("breaks the margin condition")), "{v:?}");
}

#[test]
fn verify_rejects_a_degenerate_checkerboard() {
    let v = violations(
        r#"
kind = "checkerboard"
eta_sweep = [1e-3]

[analyses]
energy = false
besov = true

[checkerboard]
i = 1
nu_plus_one = "2+"
nu_minus_one = "3+"
a = 0.0
b = 1.0
set_a = { period = 0.25, fraction = 0.5 }
set_b = { period = 0.25, fraction = 0.5 }
resolution = 32
"#,
    );
    assert!(v.iter().any(|(_, m)| m.contains("a > 0 and b > 0")), "{v:?}");
}

#[test]
fn verify_rejects_a_non_halving_sweep() {
    let v = violations(&LAMINATE.replace("[1e-3, 5e-4]", "[1e-3, 3e-4]"));
    assert!(v.iter().any(|(f, _)| f == "eta_sweep"), "{v:?}");
}

#[test]
fn malformed_toml_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = twinlab(&["run", &write_config(dir.path(), "kind = \"laminate\"\neta_sweep = [")]);
    assert_eq!(o.status.code(), Some(2));
    let o = twinlab(&["verify", &write_config(dir.path(), "kind = \"hexagon\"\neta_sweep = [1e-3]")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn version_prints_the_package_version() {
    let o = twinlab(&["version"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn shipped_configs_verify() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["laminate", "branch", "cluster", "checkerboard"] {
        let path = root.join(format!("{name}.toml"));
        let o = twinlab(&["verify", path.to_str().unwrap()]);
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stdout));
    }
}
