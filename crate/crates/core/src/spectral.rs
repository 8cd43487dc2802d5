//! Eigenvalue certification for the block-diagonal preconditioner of the
//! model saddle-point matrix
//!
//! ```text
//! B = [ g K̃        M              ]     P = [ g K̃ + M      0        ]
//!     [ M     -6g M - 3g ε² K̃     ]         [ 0       g ε² K̃ + M    ]
//! ```
//!
//! with `g = τ^{1/2}/2` and `K̃ = K + c cᵗ`. On the span of `(v_j, 0)` and
//! `(0, v_j)`, where `K̃ v_j = κ_j M v_j`, the operator `P⁻¹B` acts as a 2×2
//! matrix, so its spectrum follows from the generalized eigenvalues `κ_j`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fem::FemHierarchy;

/// Largest `n` accepted by the dense generalized eigensolver.
pub const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone)]
pub struct GeneralizedEigen {
    /// Ascending.
    pub kappa: Vec<f64>,
    /// M-orthonormal eigenvectors, one per column.
    pub vectors: DMatrix<f64>,
}

fn check_square(a: &DMatrix<f64>, n: usize) -> Result<()> {
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: a.nrows().max(a.ncols()),
        });
    }
    Ok(())
}

fn cholesky(a: &DMatrix<f64>, what: &str) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    a.clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))
}

/// Solves `A v = κ M v` for symmetric `A` and SPD `M`.
pub fn generalized_eigs(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<GeneralizedEigen> {
    let n = m.nrows();
    if n > DENSE_LIMIT {
        return Err(Error::SizeLimitExceeded {
            size: n,
            limit: DENSE_LIMIT,
        });
    }
    check_square(m, n)?;
    check_square(a, n)?;
    let l = cholesky(m, "mass matrix")?.l();
    let mut s = a.clone();
    l.solve_lower_triangular_mut(&mut s);
    let mut s = s.transpose();
    l.solve_lower_triangular_mut(&mut s);
    let s = (&s + s.transpose()) * 0.5;
    let eig = s.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let kappa = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut w = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        w.set_column(col, &eig.eigenvectors.column(i));
    }
    let lt = l.transpose();
    if !lt.solve_upper_triangular_mut(&mut w) {
        return Err(Error::NotPositiveDefinite("mass matrix".into()));
    }
    Ok(GeneralizedEigen { kappa, vectors: w })
}

/// The 2×2 matrix `C_j` for one generalized eigenvalue `κ`.
pub fn block_matrix(kappa: f64, tau: f64, eps: f64) -> [[f64; 2]; 2] {
    let g = tau.sqrt() / 2.0;
    let d1 = g * kappa + 1.0;
    let d2 = g * eps * eps * kappa + 1.0;
    [
        [g * kappa / d1, 1.0 / d1],
        [1.0 / d2, (-6.0 * g - 3.0 * g * eps * eps * kappa) / d2],
    ]
}

/// Eigenvalues of `C_j`, smaller first. They are real because `C_j` is
/// similar to a symmetric matrix.
pub fn block_eigenvalues(kappa: f64, tau: f64, eps: f64) -> (f64, f64) {
    let c = block_matrix(kappa, tau, eps);
    let half_trace = 0.5 * (c[0][0] + c[1][1]);
    let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
    let disc = (half_trace * half_trace - det).max(0.0).sqrt();
    (half_trace - disc, half_trace + disc)
}

/// `|det C| = (1 + 3τ^{1/2}ω + 3ε²ω²) / (1 + (1+ε²)ω + ε²ω²)`.
pub fn det_formula(omega: f64, tau: f64, eps: f64) -> f64 {
    let e2 = eps * eps;
    (1.0 + 3.0 * tau.sqrt() * omega + 3.0 * e2 * omega * omega) / (1.0 + (1.0 + e2) * omega + e2 * omega * omega)
}

/// Eigenvalues of `P⁻¹B` for symmetric `B` and SPD `P`, ascending.
pub fn dense_spectrum(p: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(generalized_eigs(b, p)?.kappa)
}

/// Dense `B`, `P` and `P_*` for one `(τ, ε)`.
#[derive(Debug, Clone)]
pub struct ModelMatrices {
    pub b: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub p_star: DMatrix<f64>,
}

impl ModelMatrices {
    pub fn new(k: &DMatrix<f64>, c: &DVector<f64>, m: &DMatrix<f64>, tau: f64, eps: f64) -> Self {
        let n = m.nrows();
        let g = tau.sqrt() / 2.0;
        let k_aug = k + c * c.transpose();
        let mut b = DMatrix::zeros(2 * n, 2 * n);
        b.view_mut((0, 0), (n, n)).copy_from(&(&k_aug * g));
        b.view_mut((0, n), (n, n)).copy_from(m);
        b.view_mut((n, 0), (n, n)).copy_from(m);
        b.view_mut((n, n), (n, n))
            .copy_from(&(-(m * (6.0 * g) + &k_aug * (3.0 * g * eps * eps))));
        let block_diag = |a: DMatrix<f64>, d: DMatrix<f64>| {
            let mut p = DMatrix::zeros(2 * n, 2 * n);
            p.view_mut((0, 0), (n, n)).copy_from(&a);
            p.view_mut((n, n), (n, n)).copy_from(&d);
            p
        };
        let p = block_diag(&k_aug * g + m, &k_aug * (g * eps * eps) + m);
        let p_star = block_diag(k * g + m, k * (g * eps * eps) + m);
        ModelMatrices { b, p, p_star }
    }
}

#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub level: usize,
    pub tau: f64,
    pub eps: f64,
    pub kappa_values: Vec<f64>,
    /// All `2n` eigenvalues of `P⁻¹B` from the 2×2 reduction, ascending.
    pub lambda_values: Vec<f64>,
    pub min_abs_lambda: f64,
    pub max_abs_lambda: f64,
    pub bound_lhs: f64,
    pub bound_rhs: f64,
    pub passed: bool,
    /// Largest deviation between the reduced and the dense spectrum of `P⁻¹B`.
    pub dense_mismatch: Option<f64>,
    /// `(min |λ|, max |λ|)` over the dense spectrum of `P_*⁻¹B`.
    pub p_star_range: Option<(f64, f64)>,
}

impl SpectralReport {
    pub fn csv_header() -> &'static str {
        "level,tau,eps,min_abs_lambda,max_abs_lambda,lhs_bound,passed"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            self.level,
            self.tau,
            self.eps,
            self.min_abs_lambda,
            self.max_abs_lambda,
            self.bound_lhs,
            self.passed
        )
    }

    /// Measured `C_4 = min|λ(P_*⁻¹B)| / max(τ^{1/2}, ε)`.
    pub fn p_star_lower_constant(&self) -> Option<f64> {
        self.p_star_range.map(|(lo, _)| lo / self.tau.sqrt().max(self.eps))
    }
}

pub fn reports_to_csv(reports: &[SpectralReport]) -> String {
    let mut out = String::from(SpectralReport::csv_header());
    out.push('\n');
    for r in reports {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

/// Reduced spectrum of `P⁻¹B` from the κ-values.
pub fn reduced_spectrum(kappa: &[f64], tau: f64, eps: f64) -> Vec<f64> {
    let mut lambda: Vec<f64> = kappa
        .iter()
        .flat_map(|&k| {
            let (a, b) = block_eigenvalues(k, tau, eps);
            [a, b]
        })
        .collect();
    lambda.sort_by(f64::total_cmp);
    lambda
}

/// Largest elementwise gap between two spectra compared as sorted multisets.
pub fn multiset_distance(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Certifies the eigenvalue bounds on one mesh level for every `(τ, ε)` pair.
/// With `dense = true` the spectra of `P⁻¹B` and `P_*⁻¹B` are also computed
/// directly.
pub fn certify_bounds(level: usize, taus: &[f64], epss: &[f64], dense: bool) -> Result<Vec<SpectralReport>> {
    for &v in taus.iter().chain(epss) {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::InvalidArgument(format!("tau and eps must lie in (0, 1], got {v}")));
        }
    }
    let fem = FemHierarchy::with_finest_level(level)?;
    let n = fem.space().n_dof();
    if n > DENSE_LIMIT {
        return Err(Error::SizeLimitExceeded {
            size: n,
            limit: DENSE_LIMIT,
        });
    }
    let k = fem.stiffness().to_dense();
    let m = fem.mass().to_dense();
    let c = DVector::from_column_slice(fem.mean());
    let k_aug = &k + &c * c.transpose();
    let kappa = generalized_eigs(&k_aug, &m)?.kappa;

    let mut reports = Vec::with_capacity(taus.len() * epss.len());
    for &tau in taus {
        for &eps in epss {
            let lambda = reduced_spectrum(&kappa, tau, eps);
            let abs = lambda.iter().map(|l| l.abs());
            let min_abs = abs.clone().fold(f64::INFINITY, f64::min);
            let max_abs = abs.fold(0.0, f64::max);
            let bound_lhs = tau.sqrt().max(eps) / 8.0;
            let bound_rhs = 4.0;
            let (dense_mismatch, p_star_range) = if dense {
                let mats = ModelMatrices::new(&k, &c, &m, tau, eps);
                let full = dense_spectrum(&mats.p, &mats.b)?;
                let star = dense_spectrum(&mats.p_star, &mats.b)?;
                let star_abs = star.iter().map(|l| l.abs());
                let range = (
                    star_abs.clone().fold(f64::INFINITY, f64::min),
                    star_abs.fold(0.0, f64::max),
                );
                (Some(multiset_distance(&lambda, &full)), Some(range))
            } else {
                (None, None)
            };
            reports.push(SpectralReport {
                level,
                tau,
                eps,
                kappa_values: kappa.clone(),
                lambda_values: lambda,
                min_abs_lambda: min_abs,
                max_abs_lambda: max_abs,
                bound_lhs,
                bound_rhs,
                passed: min_abs >= bound_lhs && max_abs <= bound_rhs,
                dense_mismatch,
                p_star_range,
            });
        }
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn det_formula_matches_entries() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let tau: f64 = rng.gen_range(1e-6..1.0);
            let eps: f64 = rng.gen_range(1e-4..1.0);
            let kappa: f64 = 10f64.powf(rng.gen_range(-3.0..8.0));
            let c = block_matrix(kappa, tau, eps);
            let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
            let omega = tau.sqrt() * kappa / 2.0;
            let f = det_formula(omega, tau, eps);
            assert!((det.abs() - f).abs() <= 1e-12 * f.max(1.0));
        }
    }

    #[test]
    fn block_bounds_hold_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..2000 {
            let tau: f64 = 10f64.powf(rng.gen_range(-8.0..0.0));
            let eps: f64 = 10f64.powf(rng.gen_range(-4.0..0.0));
            let kappa: f64 = 10f64.powf(rng.gen_range(-3.0..9.0));
            let c = block_matrix(kappa, tau, eps);
            let inf_norm = (c[0][0].abs() + c[0][1].abs()).max(c[1][0].abs() + c[1][1].abs());
            let (a, b) = block_eigenvalues(kappa, tau, eps);
            assert!(a.abs() <= inf_norm + 1e-12 && b.abs() <= inf_norm + 1e-12);
            assert!(inf_norm <= 4.0);
            assert!((a * b).abs() >= tau.sqrt().max(eps / 2.0) * (1.0 - 1e-12));
        }
    }

    #[test]
    fn zero_tau_limit() {
        let (a, b) = block_eigenvalues(1e-12, 1e-30, 0.5);
        assert!((a + 1.0).abs() < 1e-10 && (b - 1.0).abs() < 1e-10);
    }

    #[test]
    fn generalized_eigs_small() {
        let a = DMatrix::from_row_slice(2, 2, &[6.0, 2.0, 2.0, 2.0]);
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let e = generalized_eigs(&a, &m).unwrap();
        // det(A - κM) = 2(κ - 1)(κ - 4)
        assert!((e.kappa[0] - 1.0).abs() < 1e-13 && (e.kappa[1] - 4.0).abs() < 1e-13);
        let vtmv = e.vectors.transpose() * &m * &e.vectors;
        assert!((vtmv - DMatrix::identity(2, 2)).amax() < 1e-13);
        let too_big = DMatrix::identity(DENSE_LIMIT + 1, DENSE_LIMIT + 1);
        assert!(matches!(
            generalized_eigs(&too_big, &too_big),
            Err(Error::SizeLimitExceeded { .. })
        ));
    }
}
