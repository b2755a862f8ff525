use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gdsaddle"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

#[test]
fn classify_prints_record() {
    let out = run(&["classify", "--field", "line-of-saddles", "--point", "0.5,0.25,0.75"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["class"], "strict_saddle");
    assert!((v["lambda_min"].as_f64().unwrap() + 2.0 * 2.0_f64.sqrt()).abs() < 1e-9);
}

#[test]
fn classify_refines_nearby_seed() {
    let out = run(&[
        "classify",
        "--field",
        "double-well",
        "--point",
        "0.01,-0.98",
        "--refine",
    ]);
    let v = json(&out);
    assert_eq!(v["class"], "local_min");
    assert!((v["location"][1].as_f64().unwrap() + 1.0).abs() < 1e-10);
}

#[test]
fn run_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let out = run(&[
        "run",
        "--field",
        "double-well",
        "--alpha",
        "0.0833333333333",
        "--x0",
        "0.5,0.2",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("iter,x1,x2,f,gradnorm\n"));
    let side: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("traj.json")).unwrap()).unwrap();
    assert_eq!(side["termination"]["verdict"], "converged");
    assert_eq!(side["schema_version"], 1);
}

#[test]
fn run_with_domain_reports_exit() {
    let out = run(&[
        "run",
        "--field",
        "line-of-saddles",
        "--alpha",
        "0.1",
        "--x0",
        "0.6,0.3,0.3",
        "--domain",
        "(0,1)x(0,1)x(0,1)",
    ]);
    assert_eq!(json(&out)["termination"]["verdict"], "exited_domain");
}

#[test]
fn experiment_config_paths_are_relative_to_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    std::fs::write(
        &cfg,
        r#"{
            "schema_version": 1,
            "experiment": {
                "field": {"builtin": "double-well"},
                "domain": "(-1,1)x(-2,2)",
                "alpha": "auto",
                "margin": 0.9166666666666666,
                "trials": 200,
                "seed": 5
            },
            "output": {"report": "out/report.json", "trials_csv": "out/trials.csv"},
            "threads": 2
        }"#,
    )
    .unwrap();
    let out = run(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["trials"], 200);
    assert_eq!(report["classes"]["strict_saddle"], 0);
    assert!((report["alpha"].as_f64().unwrap() - 1.0 / 12.0).abs() < 1e-12);
    let csv = std::fs::read_to_string(dir.path().join("out/trials.csv")).unwrap();
    assert_eq!(csv.lines().count(), 201);

    // --out overrides the configured report path and is taken as given
    let other = dir.path().join("other.json");
    let out = run(&[
        "experiment",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        other.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(other.exists());
}

#[test]
fn experiment_config_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(
        &cfg,
        r#"{"schema_version": 1, "experiment": {"field": {"builtin": "double-well"}, "domain": "(-1,1)x(-2,2)",
            "alpha": 0.1, "trials": 5, "seed": 1, "trails": 3}}"#,
    )
    .unwrap();
    let out = run(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("trails"), "{err}");
    assert!(err.contains("hint:"));
}

#[test]
fn shipped_configs_parse() {
    for name in ["double-well.json", "line-of-saddles.json", "custom-expression.json"] {
        let cfg = gdsaddle::shell::RunConfig::load(&configs_dir().join(name)).unwrap();
        cfg.experiment.resolve().unwrap();
    }
}

#[test]
fn custom_expression_config_runs() {
    let mut cfg = gdsaddle::shell::RunConfig::load(&configs_dir().join("custom-expression.json")).unwrap();
    cfg.experiment.trials = 300;
    let r = gdsaddle::experiment::run_experiment_with(&cfg.experiment, cfg.execution()).unwrap();
    assert_eq!(r.classes.strict_saddle, 0);
    assert_eq!(r.basins[0].count + r.basins[1].count, 300);
}

#[test]
fn selfcheck_passes() {
    let out = run(&["selfcheck", "--points", "200", "--matrices", "200"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["passed"], true);
}

#[test]
fn missing_required_flag_is_usage_error() {
    let out = run(&["run", "--field", "double-well", "--x0", "0,0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--alpha"));
}
