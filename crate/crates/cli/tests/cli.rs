use std::path::Path;
use std::process::{Command, Output};

use tracelab_core::estimator::RefineStudy;
use tracelab_core::inequality::{FamilySweep, JMinus, CSV_HEADER};

fn tracelab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tracelab")).args(args).env("TRACELAB_OUT", out).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn list_has_ten_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = tracelab(dir.path(), &["list"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 10);
}

#[test]
fn list_json_parses() {
    let dir = tempfile::tempdir().unwrap();
    let o = tracelab(dir.path(), &["list", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let rows: Vec<serde_json::Value> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 10);
    assert_eq!(rows[0]["experiment"], "radial-sharp");
}

#[test]
fn unknown_flag_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = tracelab(dir.path(), &["list", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn out_of_range_names_key() {
    let dir = tempfile::tempdir().unwrap();
    let o = tracelab(dir.path(), &["cusp", "--alpha", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`alpha`"), "{}", stderr(&o));
}

#[test]
fn unknown_experiment_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = tracelab(dir.path(), &["sphere-packing"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`experiment`"));
}

#[test]
fn radial_sharp_annulus() {
    let dir = tempfile::tempdir().unwrap();
    let o = tracelab(dir.path(), &["radial-sharp", "--a", "1", "--b", "2", "--dim", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("c2 = 2,"), "{}", stdout(&o));
    assert!(dir.path().join("radial-sharp.csv").exists());
}

#[test]
fn cone_sweep_summary_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = tracelab(dir.path(), &["cone", "--L", "1", "--r0", "0.1", "--ratio", "0.5", "--count", "20", "--c2", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("implied C1 → 1.41421"), "{}", stdout(&o));
    let csv = std::fs::read_to_string(dir.path().join("cone.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.next(), Some("r,trace,tv,volume,slack,implied_c1"));
    assert_eq!(lines.count(), 20);
}

#[test]
fn cusp_fit_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = tracelab(dir.path(), &["cusp", "--alpha", "0.5", "--dim", "2", "--fit"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("exponent(trace−tv) = 2.00 ± 0.05, exponent(vol) = 2.50 ± 0.02"), "{}", stdout(&o));
}

#[test]
fn short_cone_sweep_misses_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let o = tracelab(dir.path(), &["cone", "--count", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn config_file_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "experiment = \"cone\"\nslope = 2\n").unwrap();
    let o = tracelab(dir.path(), &["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("slope"), "{}", stderr(&o));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "experiment = \"cone\"\nL = 2\ncount = 20\n").unwrap();
    let o = tracelab(dir.path(), &["--config", cfg.to_str().unwrap()]);
    assert!(stdout(&o).contains("2.23607"), "{}", stdout(&o));
    let o = tracelab(dir.path(), &["--config", cfg.to_str().unwrap(), "--L", "1"]);
    assert!(stdout(&o).contains("1.41421"), "{}", stdout(&o));
}

#[test]
fn out_flag_beats_environment() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let o = tracelab(env_dir.path(), &["jminus", "--out", flag_dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(flag_dir.path().join("jminus.csv").exists());
    assert!(!env_dir.path().join("jminus.csv").exists());
}

#[test]
fn json_artifacts_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let o = tracelab(dir.path(), &["cone", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("cone.json")).unwrap();
    let sweep: FamilySweep = serde_json::from_str(&text).unwrap();
    assert_eq!(sweep.params.len(), 20);
    assert_eq!(serde_json::to_string_pretty(&sweep).unwrap() + "\n", text);

    tracelab(dir.path(), &["jminus", "--format", "json"]);
    let seq: Vec<JMinus> =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("jminus.json")).unwrap()).unwrap();
    assert!(seq.iter().all(|j| j.j_plus >= 0.0));

    let o = tracelab(dir.path(), &["estimate", "--h", "0.15", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let study: RefineStudy =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("estimate.json")).unwrap()).unwrap();
    assert_eq!(study.rows.len(), 1);
}

#[test]
fn repeated_runs_are_byte_identical() {
    for args in [&["kernel-check", "--seed", "7", "--count", "5"][..], &["cusp", "--alpha", "0.25"][..]] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        tracelab(a.path(), args);
        tracelab(b.path(), args);
        let name = format!("{}.csv", args[0]);
        let x = std::fs::read(a.path().join(&name)).unwrap();
        let y = std::fs::read(b.path().join(&name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn layer_on_annulus() {
    let dir = tempfile::tempdir().unwrap();
    let o = tracelab(dir.path(), &["layer", "--domain", "annulus", "--a", "1", "--b", "2", "--count", "6"]);
    // Six terms stop at eps = 3e-3, still within 0.02 of 1.
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn planar_domains_reject_other_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let o = tracelab(dir.path(), &["shell", "--domain", "annulus", "--dim", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`dim`"));
}
