//! Experiment drivers behind the three run modes.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cahn_hilliard::fem::FemHierarchy;
use cahn_hilliard::scheme::{run, StepRecord};
use cahn_hilliard::spectral::{certify_bounds, reports_to_csv, SpectralReport};
use cahn_hilliard::study::{convergence_study, ConvergenceConfig, ConvergenceRow};

use crate::config::{Mode, RunConfig};
use crate::export::export_field;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("solver: {0}")]
    Solver(#[from] cahn_hilliard::Error),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
    #[error("run stopped after {completed} steps: {source}")]
    Incomplete {
        completed: usize,
        #[source]
        source: cahn_hilliard::Error,
    },
    #[error("{failed} of {total} spectral reports violate the bounds")]
    BoundsViolated { failed: usize, total: usize },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Io(_) => 3,
            _ => 1,
        }
    }
}

/// Aggregates over a simulation, as written to `summary.txt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub steps: usize,
    pub newton_solves: usize,
    pub avg_minres_per_solve: f64,
    pub max_minres_per_solve: usize,
    pub avg_newton_per_step: f64,
    pub avg_wall_seconds_per_step: f64,
    pub final_energy: f64,
}

impl Summary {
    pub fn from_records(records: &[StepRecord]) -> Self {
        let steps = records.len();
        let solves: usize = records.iter().map(|r| r.newton_iterations).sum();
        let total: usize = records.iter().map(StepRecord::minres_total).sum();
        let max = records
            .iter()
            .flat_map(|r| r.minres_iterations.iter().copied())
            .max()
            .unwrap_or(0);
        let wall: f64 = records.iter().map(|r| r.wall_seconds).sum();
        let per = |x: f64, n: usize| if n == 0 { 0.0 } else { x / n as f64 };
        Summary {
            steps,
            newton_solves: solves,
            avg_minres_per_solve: per(total as f64, solves),
            max_minres_per_solve: max,
            avg_newton_per_step: per(solves as f64, steps),
            avg_wall_seconds_per_step: per(wall, steps),
            final_energy: records.last().map_or(f64::NAN, |r| r.energy),
        }
    }

    pub fn to_text(&self, failure: Option<&str>) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "steps = {}", self.steps);
        let _ = writeln!(s, "newton_solves = {}", self.newton_solves);
        let _ = writeln!(s, "avg_minres_its = {:.16e}", self.avg_minres_per_solve);
        let _ = writeln!(s, "max_minres_its = {}", self.max_minres_per_solve);
        let _ = writeln!(s, "avg_newton_its = {:.16e}", self.avg_newton_per_step);
        let _ = writeln!(s, "avg_wall_s = {:.16e}", self.avg_wall_seconds_per_step);
        let _ = writeln!(s, "final_energy = {:.16e}", self.final_energy);
        let _ = writeln!(s, "completed = {}", failure.is_none());
        if let Some(f) = failure {
            let _ = writeln!(s, "failure = {f}");
        }
        s
    }
}

pub const STATS_HEADER: &str =
    "step,t,newton_its,minres_its,max_minres_its,energy,modified_energy,mass,max_abs_phi,wall_s";

pub fn stats_row(r: &StepRecord) -> String {
    format!(
        "{},{:.16e},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.6e}",
        r.step_index,
        r.time,
        r.newton_iterations,
        r.minres_total(),
        r.minres_iterations.iter().copied().max().unwrap_or(0),
        r.energy,
        r.modified_energy,
        r.mass,
        r.max_abs_phi,
        r.wall_seconds
    )
}

#[derive(Debug)]
pub enum Outcome {
    Simulation(Summary),
    Spectrum(Vec<SpectralReport>),
    Convergence(Vec<ConvergenceRow>),
}

/// Runs the configured mode and writes its outputs into `config.output_dir`.
pub fn run_experiment(config: &RunConfig) -> Result<Outcome, RunError> {
    fs::create_dir_all(&config.output_dir)?;
    match config.mode {
        Mode::Simulate => simulate(config).map(Outcome::Simulation),
        Mode::CertifySpectrum => certify(config).map(Outcome::Spectrum),
        Mode::ConvergenceStudy => study(config).map(Outcome::Convergence),
    }
}

fn simulate(config: &RunConfig) -> Result<Summary, RunError> {
    let dir = config.output_dir.as_path();
    let fem = FemHierarchy::with_finest_level(config.levels)?;
    let params = config.scheme_params();
    let last = params.num_steps()?;
    let mut snapshots: BTreeSet<usize> = config.snapshot_steps.iter().copied().filter(|&s| s <= last).collect();
    snapshots.insert(0);
    snapshots.insert(last);

    let mut stats = String::from(STATS_HEADER);
    stats.push('\n');
    let mut io_error: Option<std::io::Error> = None;
    let field = config.preset.field(config.eps);
    let outcome = run(&fem, &params, &field, config.init, |state, record| {
        if let Some(r) = record {
            stats.push_str(&stats_row(r));
            stats.push('\n');
        }
        if io_error.is_none() && snapshots.contains(&state.step_index) {
            let stem = format!("field_{}", state.step_index);
            if let Err(e) = export_field(fem.space(), &state.phi_curr, dir, &stem) {
                io_error = Some(e);
            }
        }
    })?;
    fs::write(dir.join("stats.csv"), &stats)?;
    if let Some(e) = io_error {
        return Err(e.into());
    }
    let summary = Summary::from_records(&outcome.records);
    let failure = outcome.failure.as_ref().map(ToString::to_string);
    fs::write(dir.join("summary.txt"), summary.to_text(failure.as_deref()))?;
    match outcome.failure {
        Some(source) => Err(RunError::Incomplete {
            completed: outcome.records.len(),
            source,
        }),
        None => Ok(summary),
    }
}

fn certify(config: &RunConfig) -> Result<Vec<SpectralReport>, RunError> {
    let mut reports = Vec::new();
    for &level in &config.spectral_levels {
        reports.extend(certify_bounds(
            level,
            &config.spectral_taus,
            &config.spectral_eps,
            config.spectral_dense,
        )?);
    }
    fs::write(config.output_dir.join("spectral_report.csv"), reports_to_csv(&reports))?;
    let failed = reports.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(RunError::BoundsViolated {
            failed,
            total: reports.len(),
        });
    }
    Ok(reports)
}

fn study(config: &RunConfig) -> Result<Vec<ConvergenceRow>, RunError> {
    let cfg = ConvergenceConfig {
        eps: config.eps,
        tau_per_h: config.tau_per_h,
        final_time: config.final_time,
        levels: config.study_levels.clone(),
        reference_level: config.reference_level,
    };
    let field = config.preset.field(config.eps);
    let rows = convergence_study(&cfg, &field, config.init, |msg| eprintln!("{msg}"))?;
    write_convergence(&config.output_dir, &rows)?;
    Ok(rows)
}

fn write_convergence(dir: &Path, rows: &[ConvergenceRow]) -> std::io::Result<()> {
    let mut s = String::from("level,h,tau,steps,l2_error,h1_error,h1_order,avg_minres_its\n");
    for r in rows {
        let order = r.h1_order.map_or(String::new(), |o| format!("{o:.16e}"));
        let _ = writeln!(
            s,
            "{},{:.16e},{:.16e},{},{:.16e},{:.16e},{},{:.16e}",
            r.level, r.h, r.tau, r.steps, r.l2_error, r.h1_error, order, r.avg_minres
        );
    }
    fs::write(dir.join("convergence.csv"), s)
}
