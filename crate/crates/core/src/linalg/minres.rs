//! Preconditioned MINRES for symmetric (possibly indefinite) systems with a
//! symmetric positive definite preconditioner.
//!
//! Follows the three-term Lanczos recurrence in the `P⁻¹` inner product with
//! Givens-rotation updates of the solution. The recurrence supplies the
//! `P⁻¹`-norm of the residual for free; convergence is declared when it drops
//! below `tol` times its initial value.

use super::{dot, LinearOperator};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinresStatus {
    Converged,
    /// Iteration limit reached; `x` holds the last iterate.
    MaxIterationsExceeded,
}

#[derive(Debug, Clone)]
pub struct MinresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub status: MinresStatus,
    /// Preconditioned residual norms `‖r_k‖_{P⁻¹}`, starting with `k = 0`.
    pub residual_history: Vec<f64>,
}

impl MinresOutcome {
    pub fn relative_residual(&self) -> f64 {
        let first = self.residual_history[0];
        if first == 0.0 {
            0.0
        } else {
            self.residual_history.last().unwrap() / first
        }
    }
}

/// Solves `A x = b` from a zero initial guess. `precond` applies `P⁻¹`.
pub fn minres<A, P>(a: &A, precond: &P, b: &[f64], tol: f64, maxit: usize) -> Result<MinresOutcome>
where
    A: LinearOperator + ?Sized,
    P: LinearOperator + ?Sized,
{
    let n = a.dim();
    if b.len() != n || precond.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: b.len(),
        });
    }
    if maxit == 0 {
        return Err(Error::InvalidArgument("maxit must be at least 1".into()));
    }

    let mut x = vec![0.0; n];
    let mut v_prev = vec![0.0; n];
    let mut v = b.to_vec();
    let mut z = precond.apply_vec(&v);
    let gamma_sq = dot(&z, &v);
    if gamma_sq < 0.0 {
        return Err(Error::NotPositiveDefinite(
            "preconditioner produced rᵗP⁻¹r < 0".into(),
        ));
    }
    let mut gamma = gamma_sq.sqrt();
    let gamma0 = gamma;
    let mut history = vec![gamma0];
    if gamma0 == 0.0 {
        return Ok(MinresOutcome {
            x,
            iterations: 0,
            status: MinresStatus::Converged,
            residual_history: history,
        });
    }

    let mut gamma_prev = 1.0;
    let mut eta = gamma;
    let (mut s_prev, mut s) = (0.0, 0.0);
    let (mut c_prev, mut c) = (1.0, 1.0);
    let mut w_prev = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut az = vec![0.0; n];
    let threshold = tol * gamma0;

    for it in 1..=maxit {
        for zi in z.iter_mut() {
            *zi /= gamma;
        }
        a.apply(&z, &mut az);
        let delta = dot(&az, &z);
        // v_{j+1} = A z_j - (δ/γ_j) v_j - (γ_j/γ_{j-1}) v_{j-1}
        let (f1, f2) = (delta / gamma, gamma / gamma_prev);
        let mut v_next = az.clone();
        for ((vn, vi), vp) in v_next.iter_mut().zip(&v).zip(&v_prev) {
            *vn -= f1 * vi + f2 * vp;
        }
        let z_next = precond.apply_vec(&v_next);
        let gamma_next_sq = dot(&z_next, &v_next);
        if gamma_next_sq < -1e-14 * gamma0 * gamma0 {
            return Err(Error::NotPositiveDefinite(
                "preconditioner produced vᵗP⁻¹v < 0".into(),
            ));
        }
        let gamma_next = gamma_next_sq.max(0.0).sqrt();

        let alpha0 = c * delta - c_prev * s * gamma;
        let alpha1 = alpha0.hypot(gamma_next);
        let alpha2 = s * delta + c_prev * c * gamma;
        let alpha3 = s_prev * gamma;
        if alpha1 == 0.0 {
            return Err(Error::Breakdown {
                iterations: it,
                reason: "singular tridiagonal projection".into(),
            });
        }
        let c_next = alpha0 / alpha1;
        let s_next = gamma_next / alpha1;

        let mut w_next = vec![0.0; n];
        for i in 0..n {
            w_next[i] = (z[i] - alpha3 * w_prev[i] - alpha2 * w[i]) / alpha1;
        }
        let step = c_next * eta;
        for (xi, wi) in x.iter_mut().zip(&w_next) {
            *xi += step * wi;
        }
        eta *= -s_next;
        history.push(eta.abs());

        if eta.abs() <= threshold {
            return Ok(MinresOutcome {
                x,
                iterations: it,
                status: MinresStatus::Converged,
                residual_history: history,
            });
        }
        // Lanczos exhausted the Krylov space without reaching the tolerance.
        if gamma_next <= f64::EPSILON * 1e-3 * gamma0 {
            return Err(Error::Breakdown {
                iterations: it,
                reason: format!(
                    "Lanczos vector vanished with relative residual {:.3e}",
                    eta.abs() / gamma0
                ),
            });
        }

        v_prev = std::mem::replace(&mut v, v_next);
        z = z_next;
        gamma_prev = gamma;
        gamma = gamma_next;
        s_prev = s;
        s = s_next;
        c_prev = c;
        c = c_next;
        w_prev = std::mem::replace(&mut w, w_next);
    }

    Ok(MinresOutcome {
        x,
        iterations: maxit,
        status: MinresStatus::MaxIterationsExceeded,
        residual_history: history,
    })
}
