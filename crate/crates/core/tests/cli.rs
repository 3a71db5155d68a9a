use std::path::Path;
use std::process::{Command, Output};

use bornlab::cli::{exit_code, EXIT_AMBIGUOUS_RANK, EXIT_VALIDATION};
use bornlab::Error;

fn bornlab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bornlab"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn isometry_scan_reports_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out = bornlab(&["isometry-scan", "--n", "2,3", "--p", "1.5,2,3", "--seed", "7"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = csv_rows(&dir.path().join("isometry-scan.csv"));
    assert_eq!(header, ["n", "p", "estimated_dimension", "rank_gap", "seed"]);
    assert_eq!(rows.len(), 6);
    for row in rows {
        let n: usize = row[0].parse().unwrap();
        let expected = if row[1] == "2" { n * n } else { n };
        assert_eq!(row[2].parse::<usize>().unwrap(), expected);
        assert_eq!(row[4], "7");
    }
    assert!(dir.path().join("isometry-scan.csv.meta.json").exists());
}

#[test]
fn drift_at_p_two_is_roundoff() {
    let dir = tempfile::tempdir().unwrap();
    let out = bornlab(&["drift", "--n", "2", "--p", "2"], dir.path());
    assert!(out.status.success());
    let (header, rows) = csv_rows(&dir.path().join("drift.csv"));
    assert_eq!(header, ["n", "p", "num_unitaries", "max_drift", "seed"]);
    assert_eq!(rows.len(), 1);
    assert!(rows[0][3].parse::<f64>().unwrap() <= 1e-10);
}

#[test]
fn born_test_passes_at_seed_seven() {
    let dir = tempfile::tempdir().unwrap();
    let out = bornlab(
        &["born-test", "--amps", "0.3,0.7", "--p", "2", "--trials", "100000", "--seed", "7", "--format", "json"],
        dir.path(),
    );
    assert!(out.status.success());
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("born-test.json")).unwrap()).unwrap();
    assert_eq!(json["tool"], "bornlab");
    let report = &json["results"][0]["report"];
    assert!(report["p_value"].as_f64().unwrap() > 0.01, "{report}");
    assert_eq!(report["trials"], 100_000);
}

#[test]
fn every_command_writes_its_columns() {
    let cases: [(&[&str], &[&str]); 4] = [
        (&["cauchy-check", "--trials", "50"], &["p", "equation", "max_residual", "mean_residual", "num_samples", "seed"]),
        (&["fit-exponent"], &["p", "p_hat", "residual_rms", "min_x", "max_x", "num_samples", "seed"]),
        (&["simulate", "--trials", "4"], &["trial", "p", "outcome_sequence", "joint_weight", "seed"]),
        (
            &["born-test", "--trials", "1000"],
            &["schedule_id", "p", "trials", "outcome_sequence", "count", "expected_weight", "seed"],
        ),
    ];
    let dir = tempfile::tempdir().unwrap();
    for (args, columns) in cases {
        let out = bornlab(args, dir.path());
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let (header, rows) = csv_rows(&dir.path().join(format!("{}.csv", args[0])));
        assert_eq!(header, columns);
        assert!(!rows.is_empty());
        assert!(rows.iter().all(|r| r.len() == columns.len()));
    }
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["drift", "--p", "0"][..],
        &["drift", "--p", "-1"],
        &["isometry-scan", "--n", "1"],
        &["born-test", "--trials", "10"],
        &["born-test", "--n", "2"],
        &["simulate", "--amps", "0,0"],
        &["simulate", "--format", "xml"],
        &["no-such-command"],
    ] {
        let out = bornlab(args, dir.path());
        assert_eq!(out.status.code(), Some(EXIT_VALIDATION), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn ambiguous_rank_maps_to_its_own_exit_code() {
    assert_eq!(exit_code(&Error::AmbiguousRank { gap: 4.0, required: 10.0 }), EXIT_AMBIGUOUS_RANK);
    assert_eq!(exit_code(&Error::InvalidExponent(0.0)), EXIT_VALIDATION);
}

#[test]
fn report_bodies_are_reproducible_across_output_paths() {
    let dir = tempfile::tempdir().unwrap();
    let body = |name: &str| {
        let out = bornlab(&["simulate", "--amps", "0.25,0.75", "--evolution", "hadamard", "--output", name], dir.path());
        assert!(out.status.success());
        std::fs::read_to_string(dir.path().join(name))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(body("a.csv"), body("b.csv"));
}
