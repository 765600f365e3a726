//! End-to-end tests of the command-line surface and its exit-code contract:
//! 0 = all checks pass, 1 = at least one check failed, 2 = input error.

use clate::fixtures::{model_m1, model_m2, ordered_k3};
use clate::json::{model_to_json, ordered_to_json};
use clate::Scalar as _;
use std::path::Path;
use std::process::{Command, Output};

fn clate_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_clate"))
}

fn run(args: &[&str]) -> Output {
    clate_bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, content: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path.display().to_string()
}

#[test]
fn audit_of_a_monotone_model_exits_zero_with_a_parsable_report() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "m1.json", &model_to_json(&model_m1()));
    let report_path = dir.path().join("report.json");
    let out = run(&[
        "audit",
        "--input",
        &model,
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report =
        clate::audit::AuditReport::from_json(&std::fs::read_to_string(&report_path).unwrap())
            .unwrap();
    assert!(report.passed());
    assert_eq!(report.input_kind, "model");
    assert_eq!(report.input_digest.len(), 64);
}

#[test]
fn audit_of_a_direction_flip_model_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "m2.json", &model_to_json(&model_m2()));
    let out = run(&["audit", "--input", &model]);
    assert_eq!(out.status.code(), Some(1));
    let report =
        clate::audit::AuditReport::from_json(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert!(!report.passed());
}

#[test]
fn missing_input_is_an_input_error() {
    let out = run(&["audit", "--input", "/nonexistent/model.json"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["audit", "--input", "/nonexistent/data.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unsupported_format_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "m1.json", &model_to_json(&model_m1()));
    let out = run(&["audit", "--input", &model, "--format", "yaml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn represent_writes_a_verifiable_representation() {
    let dir = tempfile::tempdir().unwrap();
    let model_path = write(dir.path(), "m1.json", &model_to_json(&model_m1()));
    let rep_path = dir.path().join("rep.json");
    let out = run(&[
        "represent",
        "--model",
        &model_path,
        "--anchor",
        "a",
        "--out",
        rep_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let rep = clate::json::representation_from_json(
        &std::fs::read_to_string(&rep_path).unwrap(),
    )
    .unwrap();
    let model = model_m1();
    assert!(clate::represent::verify_representation(&model, &rep)
        .unwrap()
        .is_verified());
    assert!(rep.normalized.is_some());
    // Anchored index reads the anchor column.
    assert_eq!(rep.index.value(0), &clate::Rational::from_ratio(1, 5));
}

#[test]
fn represent_refuses_non_monotone_models_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "m2.json", &model_to_json(&model_m2()));
    let out = run(&["represent", "--model", &model]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("monotone"));
}

#[test]
fn ordered_subcommand_builds_threshold_representations() {
    let dir = tempfile::tempdir().unwrap();
    let model_path = write(dir.path(), "k3.json", &ordered_to_json(&ordered_k3()));
    let rep_path = dir.path().join("rep.json");
    let out = run(&[
        "ordered",
        "--model",
        &model_path,
        "--out",
        rep_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let rep = clate::json::threshold_rep_from_json(
        &std::fs::read_to_string(&rep_path).unwrap(),
    )
    .unwrap();
    assert!(clate::ordered::verify_ordered(&ordered_k3(), &rep)
        .unwrap()
        .is_verified());

    // Binary model through the ordered subcommand is a usage error.
    let binary = write(dir.path(), "m1.json", &model_to_json(&model_m1()));
    let out = run(&["ordered", "--model", &binary]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_emits_deterministic_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "spec.json",
        r#"{
  "z": 2,
  "x": 2,
  "y": 2,
  "treatment": "binary",
  "class": "global_monotone",
  "seed": 7,
  "granularity": 10
}
"#,
    );
    let run_once = |tag: &str| {
        let data = dir.path().join(format!("data-{tag}.csv"));
        let model = dir.path().join(format!("model-{tag}.json"));
        let out = run(&[
            "simulate",
            "--spec",
            &spec,
            "--n",
            "500",
            "--out",
            data.to_str().unwrap(),
            "--model-out",
            model.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        (
            std::fs::read_to_string(data).unwrap(),
            std::fs::read_to_string(model).unwrap(),
        )
    };
    let (data_a, model_a) = run_once("a");
    let (data_b, model_b) = run_once("b");
    assert_eq!(data_a, data_b);
    assert_eq!(model_a, model_b);

    // The emitted model file round trips and certifies its class.
    let loaded = clate::json::model_from_json(&model_a).unwrap();
    assert_eq!(
        clate::model::classify_monotonicity(loaded.as_finite()).class,
        clate::model::MonotonicityClass::GlobalMonotone
    );
}

#[test]
fn simulate_seed_override_changes_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "spec.json",
        r#"{"z":2,"x":1,"y":2,"treatment":"binary","class":"global_monotone","seed":7,"granularity":10}"#,
    );
    let sample_with = |seed: Option<&str>| {
        let data = dir.path().join(format!("d{}.csv", seed.unwrap_or("base")));
        let mut args = vec![
            "simulate",
            "--spec",
            &spec,
            "--n",
            "200",
            "--out",
        ];
        let data_s = data.to_str().unwrap().to_string();
        args.push(&data_s);
        let mut extra = Vec::new();
        if let Some(s) = seed {
            extra = vec!["--seed".to_string(), s.to_string()];
        }
        let args: Vec<String> = args
            .into_iter()
            .map(str::to_string)
            .chain(extra)
            .collect();
        let out = clate_bin().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        std::fs::read_to_string(&data).unwrap()
    };
    let base = sample_with(None);
    let other = sample_with(Some("99"));
    assert_ne!(base, other);
}

#[test]
fn audit_ingests_csv_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let model = model_m1();
    let dataset = clate::simulate::sample(&model, 5_000, 13);
    let csv = write(dir.path(), "data.csv", &dataset.to_csv_string());
    let out = run(&["audit", "--input", &csv]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report =
        clate::audit::AuditReport::from_json(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(report.input_kind, "dataset");
    assert_eq!(
        report.check("monotonicity").unwrap().status,
        clate::audit::CheckStatus::Skipped
    );
}

#[test]
fn audit_honors_custom_columns_and_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let model = model_m2();
    let dataset = clate::simulate::sample(&model, 50_000, 29);
    let custom = dataset
        .to_csv_string()
        .replace("x,z,d,y", "cell,instr,treat,outcome");
    let csv = write(dir.path(), "data.csv", &custom);

    let out = run(&[
        "audit",
        "--input",
        &csv,
        "--columns",
        "cell,instr,treat,outcome",
    ]);
    assert_eq!(out.status.code(), Some(1));

    // A huge fixed tolerance hides the flip.
    let out = run(&[
        "audit",
        "--input",
        &csv,
        "--columns",
        "cell,instr,treat,outcome",
        "--tol",
        "0.9",
    ]);
    assert_eq!(out.status.code(), Some(0));

    // Wrong column names are a schema error.
    let out = run(&["audit", "--input", &csv]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_model_reports_classification() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "m2.json", &model_to_json(&model_m2()));
    let out = run(&["check-model", "--input", &model]);
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("summary is json");
    assert_eq!(summary["kind"], "model");
    assert_eq!(summary["monotonicity"], "locally-only monotone");
    assert_eq!(summary["preconditions_ok"], true);
}
