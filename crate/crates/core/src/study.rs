//! Empirical convergence against a fine-mesh self-reference solution.

use crate::error::{Error, Result};
use crate::fem::{self, FemHierarchy};
use crate::presets::InitialField;
use crate::scheme::{run, InitMode, SchemeParams};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    pub eps: f64,
    /// `τ = tau_per_h · h` on every level, including the reference.
    pub tau_per_h: f64,
    pub final_time: f64,
    pub levels: Vec<usize>,
    pub reference_level: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub level: usize,
    pub h: f64,
    pub tau: f64,
    pub steps: usize,
    pub l2_error: f64,
    pub h1_error: f64,
    /// `log2` of the H¹ error ratio to the previous row.
    pub h1_order: Option<f64>,
    pub avg_minres: f64,
}

/// Solves on every level in `levels` and on `reference_level`, and measures
/// the errors of `φ(T)` against the reference, in which the coarse
/// solutions are embedded exactly.
pub fn convergence_study(
    config: &ConvergenceConfig,
    field: &dyn InitialField,
    mode: InitMode,
    mut progress: impl FnMut(&str),
) -> Result<Vec<ConvergenceRow>> {
    if config.levels.is_empty() || config.levels.iter().any(|&l| l >= config.reference_level) {
        return Err(Error::InvalidArgument(
            "study levels must be non-empty and coarser than the reference".into(),
        ));
    }
    let fem_ref = FemHierarchy::with_finest_level(config.reference_level)?;
    let solve = |fem: &FemHierarchy, level: usize| -> Result<(Vec<f64>, SchemeParams, f64)> {
        let h = 0.5f64.powi(level as i32);
        let tau = config.tau_per_h * h;
        let params = SchemeParams::new(config.eps, tau, config.final_time)?;
        let out = run(fem, &params, field, mode, |_, _| {})?;
        if let Some(e) = out.failure {
            return Err(e);
        }
        let its: Vec<usize> = out.records.iter().flat_map(|r| r.minres_iterations.clone()).collect();
        let avg = its.iter().sum::<usize>() as f64 / its.len().max(1) as f64;
        Ok((out.state.phi_curr, params, avg))
    };

    progress(&format!("reference level {}", config.reference_level));
    let (phi_ref, _, _) = solve(&fem_ref, config.reference_level)?;
    let space = fem_ref.space();
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &level in &config.levels {
        progress(&format!("level {level}"));
        let fem = fem_ref.truncated(level)?;
        let (phi, params, avg) = solve(&fem, level)?;
        let fine = fem_ref.prolongate_to_finest(level, &phi)?;
        let diff: Vec<f64> = fine.iter().zip(&phi_ref).map(|(a, b)| a - b).collect();
        let l2 = fem::l2_norm_sq(space, &diff);
        let semi = fem::h1_seminorm_sq(space, &diff);
        let h1_error = (l2 + semi).sqrt();
        let h1_order = rows.last().map(|prev| (prev.h1_error / h1_error).log2() / (level - prev.level) as f64);
        rows.push(ConvergenceRow {
            level,
            h: 0.5f64.powi(level as i32),
            tau: params.tau,
            steps: params.num_steps()?,
            l2_error: l2.sqrt(),
            h1_error,
            h1_order,
            avg_minres: avg,
        });
    }
    Ok(rows)
}
