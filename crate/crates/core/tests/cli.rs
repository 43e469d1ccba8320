use std::path::Path;
use std::process::{Command, Output};

use pqm::cli::{preset, ModelConfig, ScenarioConfig, PRESET_NAMES};
use pqm::model::{DriveProfile, GaussianPulse, KerrParams};

fn pqm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pqm")).args(args).output().expect("binary runs")
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|_| panic!("stderr is not JSON: {text}"))
}

fn quick_jch() -> ScenarioConfig {
    let mut cfg = preset("fig3a").unwrap();
    cfg.name = "quick".into();
    if let ModelConfig::Jch(s) = &mut cfg.model {
        s.params.j = 0.2;
        s.drive = DriveProfile::Gaussian(GaussianPulse::quarter_width(1.0, 20.0, 8.0));
    }
    cfg.integrator.output_samples = 120;
    cfg
}

fn write_config(dir: &Path, cfg: &ScenarioConfig) -> String {
    let path = dir.join(format!("{}.toml", cfg.name));
    std::fs::write(&path, cfg.to_toml().unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .map(|d| d.map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect())
        .unwrap_or_default();
    v.sort();
    v
}

#[test]
fn lists_every_preset() {
    let out = pqm(&["presets", "list"]);
    assert!(out.status.success());
    let names: Vec<String> = String::from_utf8(out.stdout).unwrap().lines().map(String::from).collect();
    assert_eq!(names, PRESET_NAMES.iter().map(|s| s.to_string()).collect::<Vec<_>>());
}

#[test]
fn shown_preset_validates_as_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = pqm(&["presets", "show", "fig4c"]);
    assert!(out.status.success());
    let path = dir.path().join("fig4c.toml");
    std::fs::write(&path, &out.stdout).unwrap();
    assert_eq!(ScenarioConfig::load(&path).unwrap(), preset("fig4c").unwrap());
    let v = pqm(&["validate", "--config", path.to_str().unwrap()]);
    assert!(v.status.success(), "{}", String::from_utf8_lossy(&v.stderr));
    let report: serde_json::Value = serde_json::from_slice(&v.stdout).unwrap();
    assert_eq!(report["valid"], true);
    assert_eq!(report["dimension"], 36);
}

#[test]
fn invalid_drive_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick_jch();
    if let ModelConfig::Jch(s) = &mut cfg.model {
        s.drive = DriveProfile::Gaussian(GaussianPulse::quarter_width(20.0, 1.0, 8.0));
    }
    let path = write_config(dir.path(), &cfg);
    let out = pqm(&["run", "--config", &path, "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "validation");
    assert!(files_in(&dir.path().join("out")).is_empty());
}

#[test]
fn unknown_preset_and_conflicting_sources_are_rejected() {
    let out = pqm(&["run", "--preset", "fig9"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "validation");
    let out = pqm(&["validate", "--preset", "fig2b", "--config", "x.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let out = pqm(&["validate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_writes_trajectory_loop_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &quick_jch());
    let out_dir = dir.path().join("out");
    let out = pqm(&["run", "--config", &path, "--out", out_dir.to_str().unwrap(), "--samples", "80"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(files_in(&out_dir), ["quick_loop.csv", "quick_summary.json", "quick_trajectory.csv"]);

    let traj = std::fs::read_to_string(out_dir.join("quick_trajectory.csv")).unwrap();
    let header: Vec<&str> = traj.lines().next().unwrap().split(',').collect();
    assert_eq!(&header[..3], ["t", "drive", "drive_rate"]);
    assert!(header.contains(&"var_N1") && header.contains(&"p_1-_1-") && header.contains(&"min_eigenvalue"));
    assert_eq!(traj.lines().count(), 81);

    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(out_dir.join("quick_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["samples"], 80);
    assert_eq!(summary, serde_json::from_slice::<serde_json::Value>(&out.stdout).unwrap());
}

#[test]
fn cutoff_overflow_leaves_no_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ScenarioConfig {
        name: "overflow".into(),
        model: ModelConfig::Kerr(KerrParams {
            delta: 0.0,
            u: 0.0,
            gamma: 0.1,
            drive: DriveProfile::TriangularRamp { f0: 1.0, df: 2.0, t_s: 10.0 },
            n_max: 4,
        }),
        ..preset("fig4b").unwrap()
    };
    let path = write_config(dir.path(), &cfg);
    let out_dir = dir.path().join("out");
    let out = pqm(&["run", "--config", &path, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_json(&out)["error"], "cutoff-overflow");
    assert!(files_in(&out_dir).is_empty());
}

#[test]
fn failed_write_removes_earlier_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    // a directory where the loop file should go makes the second write fail
    std::fs::create_dir_all(out_dir.join("quick_loop.csv")).unwrap();
    let err = pqm::cli::run(&quick_jch(), &out_dir).unwrap_err();
    assert_eq!(err.category(), "io");
    assert_eq!(files_in(&out_dir), ["quick_loop.csv"]);
}

#[test]
fn sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &quick_jch());
    let out_dir = dir.path().join("out");
    let out = pqm(&[
        "sweep", "--config", &path, "--parameter", "initial_state", "--values", "mott,superfluid", "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("quick_sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("mott,") && rows[2].starts_with("superfluid,"));
    let area = |row: &str| row.split(',').nth(1).unwrap().parse::<f64>().unwrap();
    assert!(area(rows[1]) * area(rows[2]) < 0.0);
}

#[test]
fn bad_sweep_value_names_the_member() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &quick_jch());
    let out = pqm(&["sweep", "--config", &path, "--parameter", "initial_state", "--values", "mott,glass"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_json(&out)["message"].as_str().unwrap().contains("glass"));
}

#[test]
fn compare_models_reports_jch_plastic() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &quick_jch());
    let out_dir = dir.path().join("out");
    let out = pqm(&["compare-models", "--config", &path, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out_dir.join("plasticity.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["models"][0]["classification"], "plastic");
    assert_eq!(report["models"][0]["model"], "jch");
}
