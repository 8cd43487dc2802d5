use std::fs;
use std::path::Path;

use cahn_hilliard_cli::{parse_config, run_experiment, Outcome, RunError};

fn config(extra: &str, dir: &Path) -> cahn_hilliard_cli::RunConfig {
    let mut a: Vec<String> = extra.split_whitespace().map(String::from).collect();
    a.push("--output-dir".into());
    a.push(dir.to_str().unwrap().into());
    parse_config(a).unwrap()
}

fn stats(dir: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(dir.join("stats.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn summary_value(dir: &Path, key: &str) -> String {
    let text = fs::read_to_string(dir.join("summary.txt")).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")).map(String::from))
        .unwrap()
}

#[test]
fn equilibrium_run() {
    let dir = tempfile::tempdir().unwrap();
    let c = config("--preset constant:1 --eps 0.05 --tau 0.01 --final-time 0.05 --levels 3", dir.path());
    run_experiment(&c).unwrap();
    let rows = stats(dir.path());
    assert_eq!(rows.len(), 5);
    for r in rows {
        let newton: usize = r[2].parse().unwrap();
        assert!(newton <= 1);
        assert!(r[5].parse::<f64>().unwrap().abs() < 1e-14);
        assert!((r[7].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn table_one_coarse_row() {
    let dir = tempfile::tempdir().unwrap();
    let c = config("--preset cosine --eps 0.05 --tau 3.125e-5 --final-time 0.04 --levels 4", dir.path());
    let Outcome::Simulation(s) = run_experiment(&c).unwrap() else {
        panic!("wrong mode")
    };
    assert_eq!(s.steps, 1280);
    assert!((s.avg_minres_per_solve - 26.0).abs() <= 0.3 * 26.0, "{}", s.avg_minres_per_solve);
}

#[test]
fn summary_is_recomputable_and_output_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = "--preset cosine --eps 0.05 --tau 3.125e-5 --final-time 6.25e-4 --levels 3";
    run_experiment(&config(args, a.path())).unwrap();
    run_experiment(&config(args, b.path())).unwrap();
    let (ra, rb) = (stats(a.path()), stats(b.path()));
    assert_eq!(ra.len(), 20);
    for (x, y) in ra.iter().zip(&rb) {
        assert_eq!(x[..x.len() - 1], y[..y.len() - 1]);
    }
    let solves: usize = ra.iter().map(|r| r[2].parse::<usize>().unwrap()).sum();
    let total: usize = ra.iter().map(|r| r[3].parse::<usize>().unwrap()).sum();
    let max = ra.iter().map(|r| r[4].parse::<usize>().unwrap()).max().unwrap();
    let avg: f64 = summary_value(a.path(), "avg_minres_its").parse().unwrap();
    assert!((avg - total as f64 / solves as f64).abs() < 1e-12);
    assert_eq!(summary_value(a.path(), "max_minres_its"), max.to_string());
    assert_eq!(summary_value(a.path(), "newton_solves"), solves.to_string());
    assert_eq!(summary_value(a.path(), "completed"), "true");
}

#[test]
fn cross_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        "--preset cross --eps 0.01 --tau 3.125e-5 --final-time 6.25e-3 --levels 3 --snapshot-steps 10,180,500",
        dir.path(),
    );
    run_experiment(&c).unwrap();
    for step in [0, 10, 180, 200] {
        assert!(dir.path().join(format!("field_{step}.vtk")).exists(), "{step}");
        assert!(dir.path().join(format!("field_{step}.csv")).exists());
    }
    assert!(!dir.path().join("field_500.vtk").exists());
    let initial = fs::read_to_string(dir.path().join("field_0.csv")).unwrap();
    let values: Vec<f64> = initial
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(values.iter().all(|&v| v == 1.0 || v == -1.0));
    assert!(values.contains(&1.0));
}

#[test]
fn solver_failure_leaves_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        "--preset cosine --eps 0.05 --tau 3.125e-5 --final-time 1.5625e-4 --levels 3 --minres-maxit 2",
        dir.path(),
    );
    let err = run_experiment(&c).unwrap_err();
    assert!(matches!(err, RunError::Incomplete { completed: 0, .. }), "{err}");
    assert_eq!(err.exit_code(), 1);
    assert!(dir.path().join("stats.csv").exists());
    assert_eq!(summary_value(dir.path(), "completed"), "false");
}

#[test]
fn spectrum_mode_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let c = config("--mode certify-spectrum --spectral-levels 1 --spectral-taus 1,0.01 --spectral-eps 0.1", dir.path());
    let Outcome::Spectrum(reports) = run_experiment(&c).unwrap() else {
        panic!("wrong mode")
    };
    assert_eq!(reports.len(), 2);
    let csv = fs::read_to_string(dir.path().join("spectral_report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn convergence_mode_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        "--mode convergence-study --preset cosine --eps 0.2 --final-time 0.035 --study-levels 2,3 --reference-level 4",
        dir.path(),
    );
    let Outcome::Convergence(rows) = run_experiment(&c).unwrap() else {
        panic!("wrong mode")
    };
    assert_eq!(rows.len(), 2);
    assert!(rows[1].h1_error < rows[0].h1_error);
    let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}
