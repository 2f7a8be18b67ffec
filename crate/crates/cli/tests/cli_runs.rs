use std::path::Path;
use std::process::{Command, Output};

use arcfem::diagnostics::read_convergence_csv;
use arcfem_cli::config::ExperimentConfig;
use arcfem_cli::experiment::{run_experiment, Outputs};
use serde_json::Value;

fn arcfem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arcfem"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_into(dir: &Path, extra: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut args = vec!["run", "ex1", "--N", "8,16,32", "--out", out];
    args.extend_from_slice(extra);
    let output = arcfem(&args);
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let output = run_into(dir.path(), &[]);
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("standard FEM") && stdout.contains("enriched FEM"));

    for method in ["standard", "enriched"] {
        let table =
            read_convergence_csv(read(&dir.path().join(format!("table_{method}.csv"))).as_slice())
                .unwrap();
        assert_eq!(table.iter().map(|r| r.n).collect::<Vec<_>>(), [16, 32]);
        assert!(table[0].order.is_none());
        let order = table[1].order.unwrap();
        assert!(order > 0.3 && order < 1.5, "{method}: {order}");
        for n in [8, 16, 32] {
            let profile = read(&dir.path().join(method).join(format!("solution_N{n}.csv")));
            let text = String::from_utf8(profile).unwrap();
            assert!(text.starts_with("s,U,psi\n"));
            assert_eq!(text.lines().count(), 1025);
        }
    }

    let diag: Value = serde_json::from_slice(&read(&dir.path().join("diagnostics.json"))).unwrap();
    for key in [
        "g_values",
        "compatibility_residual",
        "condition_estimate",
        "solve_residual",
        "exponent_psi_left",
        "exponent_psi_right",
        "exponent_U_left",
        "exponent_U_right",
    ] {
        assert!(diag.get(key).is_some(), "missing {key}");
    }
    assert_eq!(diag["example"], "ex1");
    assert_eq!(diag["g_values"]["left"], -1.0);
    let residual = diag["compatibility_residual"]["enriched"]["32"]
        .as_f64()
        .unwrap();
    assert!(residual.abs() < 1e-10);
}

#[test]
fn reruns_are_bitwise_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_into(a.path(), &["--method", "enriched"]);
    run_into(b.path(), &["--method", "enriched"]);
    for file in [
        "table_enriched.csv",
        "diagnostics.json",
        "enriched/solution_N32.csv",
    ] {
        assert_eq!(
            read(&a.path().join(file)),
            read(&b.path().join(file)),
            "{file}"
        );
    }
}

#[test]
fn matrix_dump_is_written_on_request() {
    let dir = tempfile::tempdir().unwrap();
    run_into(dir.path(), &["--method", "standard", "--dump-matrices"]);
    let dump = dir.path().join("standard/matrices_N8");
    assert!(std::fs::read_dir(&dump).unwrap().count() > 0);
}

#[test]
fn sweep_writes_tables_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let output = arcfem(&[
        "sweep", "ex2", "--N", "8,16", "--method", "standard", "--out", out,
    ]);
    assert!(output.status.success());
    assert!(dir.path().join("table_standard.csv").exists());
    assert!(!dir.path().join("diagnostics.json").exists());
    assert!(!dir.path().join("standard").exists());
}

#[test]
fn bad_levels_and_examples_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for args in [
        vec!["run", "ex1", "--N", "8,16,24", "--out", out],
        vec!["run", "ex3", "--N", "8", "--out", out],
        vec!["run", "custom", "--N", "8", "--out", out],
        vec!["run", "ex1", "--method", "spectral", "--out", out],
    ] {
        let output = arcfem(&args);
        assert_eq!(output.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&output.stderr).starts_with("error:"));
    }
}

#[test]
fn config_file_is_merged_with_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    let out = dir.path().join("from_config");
    std::fs::write(
        &config,
        format!(
            r#"{{"example": "ex2", "method": "standard", "N": [8, 16], "out": {:?},
                "field": {{"x_min": -1.5, "x_max": 1.5, "y_min": -0.5, "y_max": 1.5, "nx": 7, "ny": 5}}}}"#,
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let output = arcfem(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--method",
        "enriched",
    ]);
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(out.join("table_enriched.csv").exists());
    assert!(!out.join("table_standard.csv").exists());
    let field = String::from_utf8(read(&out.join("field.csv"))).unwrap();
    assert!(field.starts_with("x,y,u,masked\n"));
    assert_eq!(field.lines().count(), 1 + 7 * 5);
}

#[test]
fn field_subcommand_masks_points_near_the_arc() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let output = arcfem(&["field", "ex2", "--N", "32", "--points", "21", "--out", out]);
    assert!(output.status.success());
    let mut reader = csv::Reader::from_path(dir.path().join("field.csv")).unwrap();
    let rows: Vec<(f64, f64, Option<f64>, u8)> = reader.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 21 * 21);
    for (_, _, u, masked) in &rows {
        assert_eq!(u.is_none(), *masked == 1);
    }
    assert!(rows.iter().any(|r| r.3 == 1));
    assert!(rows.iter().filter_map(|r| r.2).all(f64::is_finite));
}

#[test]
fn validate_passes() {
    let output = arcfem(&["validate"]);
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(output.status.success(), "{stdout}");
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn library_entry_point_matches_binary_tables() {
    let dir = tempfile::tempdir().unwrap();
    run_into(dir.path(), &["--method", "standard"]);
    let config = ExperimentConfig {
        levels: vec![8, 16, 32],
        method: "standard".parse().unwrap(),
        out: dir.path().join("lib"),
        ..Default::default()
    };
    let mut log = Vec::new();
    let summary = run_experiment(&config, Outputs::Tables, &mut log).unwrap();
    let from_binary =
        read_convergence_csv(read(&dir.path().join("table_standard.csv")).as_slice()).unwrap();
    assert_eq!(summary.runs[0].records, from_binary);
}
