use std::fs;
use std::path::Path;
use std::process::Command;

use hpo::commands::{cmd_compare, cmd_run, cmd_sweep, Overrides, RunDocument};
use hpo::config::ExperimentConfig;
use hpo::plot::{cmd_plot, Panel};

const EXEMPLAR: &str = r#"{
  "schema_version": 1,
  "instance": { "kind": "exemplar1d", "noise": 0.1 },
  "runs": [
    { "name": "a", "solver": { "beta": 4.0, "eta": 0.001, "gamma_constraints": 0.02, "iterations": 2000, "seed": 1 } },
    { "name": "b", "solver": { "beta": 4.0, "eta": 0.001, "gamma_constraints": 0.02, "iterations": 2000, "seed": 2,
                               "penalty": "squared_hinge", "output_rule": "final" } }
  ]
}"#;

fn overrides(out: &Path, workers: usize) -> Overrides {
    Overrides {
        out: Some(out.to_path_buf()),
        workers: Some(workers),
        ..Overrides::default()
    }
}

fn hpo() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hpo"))
}

#[test]
fn unknown_keys_are_rejected_with_location() {
    let text = EXEMPLAR.replace("\"seed\": 1 }", "\"seed\": 1, \"etta\": 2 }");
    let err = format!("{:#}", ExperimentConfig::parse(&text).unwrap_err());
    assert!(err.contains("etta"), "{err}");
    assert!(err.contains("line"), "{err}");
}

#[test]
fn structural_errors_are_rejected() {
    let dup = EXEMPLAR.replace("\"name\": \"b\"", "\"name\": \"a\"");
    assert!(ExperimentConfig::parse(&dup).is_err());
    let both = EXEMPLAR.replace("\"runs\"", "\"instance_file\": \"x.json\", \"runs\"");
    assert!(ExperimentConfig::parse(&both).is_err());
    let version = EXEMPLAR.replace("\"schema_version\": 1", "\"schema_version\": 9");
    assert!(ExperimentConfig::parse(&version).is_err());
    let bad = EXEMPLAR.replace(
        "\"eta\": 0.001, \"gamma_constraints\": 0.02, \"iterations\": 2000, \"seed\": 1",
        "\"eta\": -1.0, \"gamma_constraints\": 0.02, \"iterations\": 2000, \"seed\": 1",
    );
    assert!(ExperimentConfig::parse(&bad).is_err());
}

#[test]
fn run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(EXEMPLAR).unwrap();
    let reports = cmd_run(&cfg, &overrides(dir.path(), 1)).unwrap();
    assert_eq!(reports.len(), 2);
    for name in ["a", "b"] {
        for file in ["run.json", "trajectory.csv", "certificate.json", "instance.json"] {
            assert!(dir.path().join(name).join(file).is_file(), "{name}/{file}");
        }
        let doc: RunDocument =
            serde_json::from_str(&fs::read_to_string(dir.path().join(name).join("run.json")).unwrap()).unwrap();
        assert_eq!(doc.name, name);
        assert_eq!(doc.provenance.config_hash.len(), 64);
        assert_eq!(Some(doc.provenance.instance_hash.clone()), doc.result.instance_hash);
    }
}

#[test]
fn runs_are_deterministic_and_worker_count_independent() {
    let cfg = ExperimentConfig::parse(EXEMPLAR).unwrap();
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    cmd_run(&cfg, &overrides(d1.path(), 1)).unwrap();
    cmd_run(&cfg, &overrides(d2.path(), 2)).unwrap();
    for name in ["a", "b"] {
        for file in ["trajectory.csv", "certificate.json", "instance.json"] {
            let a = fs::read(d1.path().join(name).join(file)).unwrap();
            let b = fs::read(d2.path().join(name).join(file)).unwrap();
            assert_eq!(a, b, "{name}/{file}");
        }
    }
}

#[test]
fn seed_override_changes_the_stream() {
    let cfg = ExperimentConfig::parse(EXEMPLAR).unwrap();
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    cmd_run(&cfg, &overrides(d1.path(), 1)).unwrap();
    let mut o = overrides(d2.path(), 1);
    o.seed = Some(99);
    cmd_run(&cfg, &o).unwrap();
    let a = fs::read(d1.path().join("a/trajectory.csv")).unwrap();
    let b = fs::read(d2.path().join("a/trajectory.csv")).unwrap();
    assert_ne!(a, b);
}

const COMPARE: &str = r#"{
  "schema_version": 1,
  "instance": { "kind": "exemplar1d", "noise": 0.05 },
  "compare": {
    "betas": [1.0, 4.0, 16.0],
    "solver": { "beta": 1.0, "eta": 0.0002, "gamma_constraints": 0.001, "batch_constraint": 4,
                "iterations": 20000, "seed": 7, "output_rule": "final" }
  }
}"#;

#[test]
fn compare_covers_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(COMPARE).unwrap();
    let rows = cmd_compare(&cfg, &overrides(dir.path(), 3)).unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows
        .iter()
        .all(|r| r.status == "completed" && !r.certified_epsilon.is_empty()));
    let table = fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    assert_eq!(table.lines().count(), 7);
    let violation = |cell: &str| -> f64 {
        let row = rows.iter().find(|r| r.cell == cell).unwrap();
        row.final_max_violation.parse().unwrap()
    };
    assert!(violation("hinge_beta_4") <= 1e-2);
    assert!(violation("squared_hinge_beta_1") > violation("squared_hinge_beta_4"));
    assert!(violation("squared_hinge_beta_4") > violation("squared_hinge_beta_16"));
    assert!(dir.path().join("compare/hinge_beta_16/trajectory.csv").is_file());
    assert!(dir.path().join("compare/squared_hinge_beta_1/trajectory.csv").is_file());
}

#[test]
fn unpaired_compare_uses_distinct_seeds() {
    let read_seed = |dir: &Path, cell: &str| {
        let doc: RunDocument =
            serde_json::from_str(&fs::read_to_string(dir.join("compare").join(cell).join("run.json")).unwrap())
                .unwrap();
        doc.result.config.seed
    };
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(COMPARE).unwrap();
    cmd_compare(&cfg, &overrides(dir.path(), 2)).unwrap();
    assert_eq!(
        read_seed(dir.path(), "hinge_beta_1"),
        read_seed(dir.path(), "hinge_beta_4")
    );

    let unpaired = COMPARE.replace("\"betas\"", "\"paired\": false, \"betas\"");
    let cfg = ExperimentConfig::parse(&unpaired).unwrap();
    let dir = tempfile::tempdir().unwrap();
    cmd_compare(&cfg, &overrides(dir.path(), 2)).unwrap();
    assert_ne!(
        read_seed(dir.path(), "hinge_beta_1"),
        read_seed(dir.path(), "hinge_beta_4")
    );
}

#[test]
fn sweep_rows_follow_the_schedule_and_empty_grid_is_a_noop() {
    let text = r#"{
      "schema_version": 1,
      "instance": { "kind": "quadratic", "dim": 3, "m": 5, "seed": 21 },
      "sweep": {
        "setting": "one",
        "epsilons": [1.0, 0.5],
        "batches": { "constraint_block": 5, "constraint": 4 },
        "iteration_cap": 100,
        "solver": { "beta": 2.0, "eta": 0.001, "gamma_constraints": 0.01, "iterations": 1, "seed": 3 }
      }
    }"#;
    let dir = tempfile::tempdir().unwrap();
    let rows = cmd_sweep(&ExperimentConfig::parse(text).unwrap(), &overrides(dir.path(), 2)).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].eta > rows[1].eta);
    assert_eq!(rows[1].iterations, 64 * rows[0].iterations);
    assert_eq!(rows[1].iterations_run, "100");
    assert!(dir.path().join("sweep.csv").is_file());

    let empty = text.replace("[1.0, 0.5]", "[]");
    let dir = tempfile::tempdir().unwrap();
    let rows = cmd_sweep(&ExperimentConfig::parse(&empty).unwrap(), &overrides(dir.path(), 1)).unwrap();
    assert!(rows.is_empty());
    assert!(!dir.path().join("sweep.csv").exists());
}

#[test]
fn divergence_fails_the_command_and_keeps_partial_logs() {
    let cfg_text = r#"{
      "schema_version": 1,
      "instance": { "kind": "exemplar1d", "noise": 0.0 },
      "runs": [ { "name": "blowup", "solver": { "beta": 4.0, "eta": 5.0, "gamma_constraints": 0.5, "iterations": 1000, "stride": 1 } } ]
    }"#;
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    fs::write(&cfg_path, cfg_text).unwrap();
    let out = dir.path().join("out");
    let status = hpo()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(!status.status.success());
    assert!(String::from_utf8_lossy(&status.stderr).contains("diverged"));
    assert!(out.join("blowup/run.json").is_file());
    assert!(out.join("blowup/trajectory.csv").is_file());
    assert!(!out.join("blowup/certificate.json").exists());
}

#[test]
fn certify_and_plot_from_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    fs::write(&cfg_path, EXEMPLAR).unwrap();
    let out = dir.path().join("out");
    let ok = hpo()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(ok.success());

    let cert_dir = dir.path().join("cert");
    let ok = hpo()
        .arg("certify")
        .arg("--run")
        .arg(out.join("a/run.json"))
        .arg("--instance")
        .arg(out.join("a/instance.json"))
        .args(["--every", "50", "--out"])
        .arg(&cert_dir)
        .status()
        .unwrap();
    assert!(ok.success());
    let reg: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(cert_dir.join("regularity.json")).unwrap()).unwrap();
    assert!(reg["pl"]["mu"].as_f64().unwrap() > 0.0);
    assert_eq!(reg["all_vacuous"], false);
    for snap in reg["frvp"].as_array().unwrap() {
        if !snap["violating"].as_array().unwrap().is_empty() {
            assert!(snap["sigma_min"].as_f64().unwrap() > 0.0);
        }
    }
    assert!(cert_dir.join("snapshots.csv").is_file());

    let fig = dir.path().join("fig");
    let ok = hpo()
        .arg("plot")
        .arg(out.join("a/trajectory.csv"))
        .arg(out.join("b/trajectory.csv"))
        .arg("--out")
        .arg(&fig)
        .status()
        .unwrap();
    assert!(ok.success());
    for f in [
        "a_trajectory_constraints.svg",
        "a_trajectory_objective.svg",
        "b_trajectory_objective.svg",
    ] {
        let svg = fs::read_to_string(fig.join(f)).unwrap();
        assert!(svg.starts_with("<svg"), "{f}");
    }
}

#[test]
fn plots_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(EXEMPLAR).unwrap();
    cmd_run(&cfg, &overrides(&dir.path().join("out"), 1)).unwrap();
    let csv = vec![dir.path().join("out/a/trajectory.csv")];
    let panels = [Panel::Constraints, Panel::Objective];
    let first = cmd_plot(&csv, &dir.path().join("f1"), &panels, 400).unwrap();
    let second = cmd_plot(&csv, &dir.path().join("f2"), &panels, 400).unwrap();
    assert_eq!(first.len(), 2);
    for (a, b) in first.iter().zip(&second) {
        assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
    }
}

#[test]
fn malformed_csv_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let headers_only = dir.path().join("headers.csv");
    fs::write(&headers_only, "t,phi_exact,f_exact,max_violation\n").unwrap();
    let garbage = dir.path().join("garbage.csv");
    fs::write(&garbage, "t,f_exact\n1,abc\n").unwrap();
    let fig = dir.path().join("fig");
    for csv in [&empty, &headers_only, &garbage] {
        assert!(cmd_plot(std::slice::from_ref(csv), &fig, &[Panel::Objective], 400).is_err());
    }
    assert!(!fig.exists());
}

#[test]
fn small_beta_is_recorded_as_a_warning() {
    let text = EXEMPLAR.replace(
        "\"beta\": 4.0, \"eta\": 0.001, \"gamma_constraints\": 0.02, \"iterations\": 2000, \"seed\": 1",
        "\"beta\": 0.25, \"eta\": 0.001, \"gamma_constraints\": 0.02, \"iterations\": 2000, \"seed\": 1",
    );
    let dir = tempfile::tempdir().unwrap();
    let reports = cmd_run(&ExperimentConfig::parse(&text).unwrap(), &overrides(dir.path(), 1)).unwrap();
    let a = reports.iter().find(|r| r.name == "a").unwrap();
    assert!(!a.run.warnings.is_empty());
    let b = reports.iter().find(|r| r.name == "b").unwrap();
    assert!(b.run.warnings.is_empty());
    let doc: RunDocument = serde_json::from_str(&fs::read_to_string(dir.path().join("a/run.json")).unwrap()).unwrap();
    assert_eq!(doc.result.warnings, a.run.warnings);
}
