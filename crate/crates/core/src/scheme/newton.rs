//! One Newton linearization of the mean-zero nonlinear system and its
//! solution through the scaled, unconstrained saddle-point formulation.

use nalgebra::{DMatrix, DVector};

use super::SchemeParams;
use crate::error::{Error, Result};
use crate::fem::FemHierarchy;
use crate::linalg::{minres, BlockPreconditioner, CsrMatrix, MinresStatus, RankOneAugmented, SaddleOperator};

/// Linearized system for one Newton step:
///
/// ```text
/// τε (K + c cᵗ) δμ + M δφ                             = F̃
/// M δμ - [(1/4ε) Πᵗ J Π + βε (K + c cᵗ)] δφ          = G̃
/// ```
///
/// with `β = 3/4` for the two-step scheme and `β = 1/2` for the start step,
/// and `Π = I - 1 cᵗ / |Ω|` the projection onto mean-zero coefficient
/// vectors. Its solution is mean-zero and solves the constrained system.
#[derive(Debug, Clone)]
pub struct NewtonSystem {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub jacobian: CsrMatrix,
    pub stiffness_weight: f64,
}

/// Variable scaling: `δμ = s u`, `δφ = p / s` with `s = (4τ)^{-1/4} ε^{-1/2}`.
pub fn mu_scale(tau: f64, eps: f64) -> f64 {
    (4.0 * tau).powf(-0.25) / eps.sqrt()
}

/// Maps `(δμ, δφ)` to scaled unknowns `(u, p)`.
pub fn to_scaled(tau: f64, eps: f64, dmu: &[f64], dphi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let s = mu_scale(tau, eps);
    (
        dmu.iter().map(|v| v / s).collect(),
        dphi.iter().map(|v| v * s).collect(),
    )
}

/// Maps scaled unknowns `(u, p)` back to `(δμ, δφ)`.
pub fn from_scaled(tau: f64, eps: f64, u: &[f64], p: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let s = mu_scale(tau, eps);
    (
        u.iter().map(|v| v * s).collect(),
        p.iter().map(|v| v / s).collect(),
    )
}

#[derive(Debug, Clone)]
pub struct NewtonDirection {
    pub dmu: Vec<f64>,
    pub dphi: Vec<f64>,
    pub minres_iterations: usize,
}

impl NewtonSystem {
    pub fn n(&self) -> usize {
        self.f.len()
    }

    pub fn residual_norm(&self) -> f64 {
        (crate::linalg::dot(&self.f, &self.f) + crate::linalg::dot(&self.g, &self.g)).sqrt()
    }

    /// Right-hand side of the scaled system, `(s F̃, G̃ / s)`.
    pub fn scaled_rhs(&self, params: &SchemeParams) -> Vec<f64> {
        let s = mu_scale(params.tau, params.eps);
        self.f
            .iter()
            .map(|v| s * v)
            .chain(self.g.iter().map(|v| v / s))
            .collect()
    }

    /// Solves the scaled system by preconditioned MINRES and unscales.
    pub fn solve(
        &self,
        fem: &FemHierarchy,
        params: &SchemeParams,
        precond: &BlockPreconditioner,
        tol: f64,
    ) -> Result<NewtonDirection> {
        let op = SaddleOperator::newton(
            params.tau,
            params.eps,
            self.stiffness_weight,
            RankOneAugmented::new(fem.stiffness(), fem.mean()),
            fem.mass(),
            &self.jacobian,
        )
        .with_mean_projection(fem.mean());
        let rhs = self.scaled_rhs(params);
        let out = minres(&op, precond, &rhs, tol, params.minres_maxit)?;
        if out.status == MinresStatus::MaxIterationsExceeded {
            return Err(Error::NotConverged {
                iterations: out.iterations,
                relative_residual: out.relative_residual(),
            });
        }
        let n = self.n();
        let (dmu, dphi) = from_scaled(params.tau, params.eps, &out.x[..n], &out.x[n..]);
        Ok(NewtonDirection {
            dmu,
            dphi,
            minres_iterations: out.iterations,
        })
    }

    /// The unscaled `2n × 2n` matrix, densely, ordered `(δμ, δφ)`.
    pub fn unscaled_dense(&self, fem: &FemHierarchy, params: &SchemeParams) -> DMatrix<f64> {
        let (tau, eps) = (params.tau, params.eps);
        let n = self.n();
        let c = DVector::from_column_slice(fem.mean());
        let k_aug = fem.stiffness().to_dense() + &c * c.transpose();
        let m = fem.mass().to_dense();
        let ones = DVector::from_element(n, 1.0);
        let proj = DMatrix::identity(n, n) - &ones * c.transpose() / c.sum();
        let j = proj.transpose() * self.jacobian.to_dense() * &proj;
        let mut a = DMatrix::zeros(2 * n, 2 * n);
        a.view_mut((0, 0), (n, n)).copy_from(&(&k_aug * (tau * eps)));
        a.view_mut((0, n), (n, n)).copy_from(&m);
        a.view_mut((n, 0), (n, n)).copy_from(&m);
        a.view_mut((n, n), (n, n))
            .copy_from(&(-(j / (4.0 * eps) + k_aug * (self.stiffness_weight * eps))));
        a
    }
}
