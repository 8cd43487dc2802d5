//! Discrete energy laws of the scheme, used as run-time diagnostics.

use super::StepRecord;
use crate::error::{Error, Result};
use crate::fem::{self, FemHierarchy};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyInequality {
    /// `E(φ¹) + τε‖∇μ^{1/2}‖² + ‖φ¹ - φ⁰‖² / 4ε`.
    pub lhs: f64,
    /// `E(φ⁰) + ετ² ‖Δ_h μ⁰‖² / 4`.
    pub rhs: f64,
}

impl EnergyInequality {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

/// Both sides of the start-step energy inequality.
pub fn first_step_energy_inequality(
    fem: &FemHierarchy,
    phi0: &[f64],
    mu0: &[f64],
    phi1: &[f64],
    mu_half: &[f64],
    eps: f64,
    tau: f64,
) -> Result<EnergyInequality> {
    let space = fem.space();
    let n = space.n_dof();
    for v in [phi0, mu0, phi1, mu_half] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: v.len(),
            });
        }
    }
    let diff: Vec<f64> = phi1.iter().zip(phi0).map(|(a, b)| a - b).collect();
    let lap_mu0 = fem::discrete_laplacian(fem.mass(), fem.stiffness(), mu0)?;
    let lhs = fem::integrate_energy(space, phi1, eps)
        + tau * eps * fem.stiffness().bilinear(mu_half, mu_half)
        + fem.mass().bilinear(&diff, &diff) / (4.0 * eps);
    let rhs = fem::integrate_energy(space, phi0, eps)
        + eps * tau * tau / 4.0 * fem.mass().bilinear(&lap_mu0, &lap_mu0);
    Ok(EnergyInequality { lhs, rhs })
}

/// Relative residuals of the telescoped energy equality after each step
/// `ℓ ≥ 1` of the two-step scheme:
///
/// ```text
/// F(φ^{ℓ+1}, φ^ℓ) + Σ_{m=1}^{ℓ} [τε‖∇μ^{m+1/2}‖² + D_m] - F(φ¹, φ⁰)
/// ```
///
/// divided by `|F(φ¹, φ⁰)|`. `records[0]` must be the start step.
pub fn energy_law_residuals(records: &[StepRecord]) -> Vec<f64> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    let reference = first.modified_energy;
    let scale = reference.abs().max(f64::MIN_POSITIVE);
    let mut dissipated = 0.0;
    records[1..]
        .iter()
        .map(|r| {
            dissipated += r.chemical_dissipation + r.numerical_dissipation;
            (r.modified_energy + dissipated - reference).abs() / scale
        })
        .collect()
}
