//! Quadratic Lagrange finite elements: assembly of the mass, stiffness and
//! Jacobian matrices, the mean vector, interpolation, Ritz projection, the
//! discrete Laplacian and the Cahn-Hilliard energy functionals.

mod quadrature;
mod space;

pub use quadrature::QuadratureRule;
pub use space::{p2_basis, CoeffVector, P2Space};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{build_prolongation, conjugate_gradient, CsrMatrix, RankOneAugmented};
use crate::mesh::{MeshHierarchy, Point};

const PROJECTION_TOL: f64 = 1e-13;
const MASS_SOLVE_TOL: f64 = 1e-12;

/// Ritz projection for the Neumann problem: `a(R f - f, w) = 0` for all `w`
/// and `(R f - f, 1) = 0`, computed from `(K + c cᵗ) x = b + c (f, 1)` with
/// `b(k) = (∇f, ∇φ_k)`.
pub fn ritz_projection<F, G>(
    space: &P2Space,
    stiffness: &CsrMatrix,
    mean: &[f64],
    f: F,
    grad_f: G,
) -> Result<CoeffVector>
where
    F: Fn(Point) -> f64,
    G: Fn(Point) -> [f64; 2],
{
    let mut rhs = space.assemble_gradient_load(|t, q| grad_f(space.quadrature_point(t, q)));
    let f_mean = space.integrate(|t, q| f(space.quadrature_point(t, q)));
    if !f_mean.is_finite() || rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "field is not finite at a quadrature point".into(),
        ));
    }
    for (r, c) in rhs.iter_mut().zip(mean) {
        *r += c * f_mean;
    }
    let op = RankOneAugmented::new(stiffness, mean);
    let diag: Vec<f64> = stiffness
        .diagonal()
        .iter()
        .zip(mean)
        .map(|(d, c)| d + c * c)
        .collect();
    let maxit = 20 * space.n_dof() + 100;
    Ok(conjugate_gradient(&op, &diag, &rhs, PROJECTION_TOL, maxit)?.x)
}

/// Solves `M x = b` to a relative residual of 1e-12.
pub fn mass_solve(mass: &CsrMatrix, b: &[f64]) -> Result<CoeffVector> {
    let maxit = 10 * mass.nrows() + 100;
    Ok(conjugate_gradient(mass, &mass.diagonal(), b, MASS_SOLVE_TOL, maxit)?.x)
}

/// Discrete Neumann Laplacian `w = -M⁻¹ K v`, i.e. `(w, ψ) = -a(v, ψ)`.
pub fn discrete_laplacian(mass: &CsrMatrix, stiffness: &CsrMatrix, v: &[f64]) -> Result<CoeffVector> {
    let mut kv = stiffness.mul_vec(v);
    kv.iter_mut().for_each(|x| *x = -*x);
    mass_solve(mass, &kv)
}

/// `E(φ) = ∫ (φ² - 1)² / (4ε) + ε |∇φ|² / 2`.
pub fn integrate_energy(space: &P2Space, phi: &[f64], eps: f64) -> f64 {
    let mut total = 0.0;
    for t in 0..space.num_triangles() {
        let local = space.local_coeffs(t, phi);
        let mut acc = 0.0;
        for (q, w) in space.quadrature().weights.iter().enumerate() {
            let v = space.value_at(q, &local);
            let g = space.gradient_at(t, q, &local);
            let well = v * v - 1.0;
            acc += w * (well * well / (4.0 * eps) + 0.5 * eps * (g[0] * g[0] + g[1] * g[1]));
        }
        total += space.area(t) * acc;
    }
    total
}

/// `F(φ, ψ) = E(φ) + ‖φ - ψ‖² / (4ε) + ε ‖∇(φ - ψ)‖² / 8`.
pub fn integrate_modified_energy(space: &P2Space, phi: &[f64], psi: &[f64], eps: f64) -> f64 {
    let diff: Vec<f64> = phi.iter().zip(psi).map(|(a, b)| a - b).collect();
    integrate_energy(space, phi, eps)
        + l2_norm_sq(space, &diff) / (4.0 * eps)
        + eps * h1_seminorm_sq(space, &diff) / 8.0
}

pub fn l2_norm_sq(space: &P2Space, v: &[f64]) -> f64 {
    space.integrate_fe(&[v], |x| x[0] * x[0])
}

pub fn h1_seminorm_sq(space: &P2Space, v: &[f64]) -> f64 {
    let mut total = 0.0;
    for t in 0..space.num_triangles() {
        let local = space.local_coeffs(t, v);
        let mut acc = 0.0;
        for (q, w) in space.quadrature().weights.iter().enumerate() {
            let g = space.gradient_at(t, q, &local);
            acc += w * (g[0] * g[0] + g[1] * g[1]);
        }
        total += space.area(t) * acc;
    }
    total
}

/// `‖v - f‖_{L²}` and `|v - f|_{H¹}` against an analytic function.
pub fn errors_against<F, G>(space: &P2Space, v: &[f64], f: F, grad_f: G) -> (f64, f64)
where
    F: Fn(Point) -> f64,
    G: Fn(Point) -> [f64; 2],
{
    let (mut l2, mut h1) = (0.0, 0.0);
    for t in 0..space.num_triangles() {
        let local = space.local_coeffs(t, v);
        let (mut a, mut b) = (0.0, 0.0);
        for (q, w) in space.quadrature().weights.iter().enumerate() {
            let x = space.quadrature_point(t, q);
            let e = space.value_at(q, &local) - f(x);
            let g = space.gradient_at(t, q, &local);
            let gf = grad_f(x);
            a += w * e * e;
            b += w * ((g[0] - gf[0]).powi(2) + (g[1] - gf[1]).powi(2));
        }
        l2 += space.area(t) * a;
        h1 += space.area(t) * b;
    }
    (l2.sqrt(), h1.sqrt())
}

/// P2 spaces on every level of a mesh hierarchy, with their mass and
/// stiffness matrices and the prolongations between consecutive levels.
#[derive(Debug, Clone)]
pub struct FemHierarchy {
    spaces: Vec<P2Space>,
    mass: Vec<CsrMatrix>,
    stiffness: Vec<CsrMatrix>,
    /// `prolongations[k]` maps level `k` coefficients to level `k + 1`.
    prolongations: Vec<CsrMatrix>,
    mean: CoeffVector,
}

impl FemHierarchy {
    pub fn new(meshes: &MeshHierarchy) -> Result<Self> {
        let spaces: Vec<P2Space> = meshes
            .levels()
            .iter()
            .map(|m| P2Space::new(Arc::clone(m)))
            .collect();
        let mass = spaces.iter().map(P2Space::assemble_mass).collect();
        let stiffness = spaces.iter().map(P2Space::assemble_stiffness).collect();
        let prolongations = spaces
            .windows(2)
            .enumerate()
            .map(|(k, pair)| build_prolongation(&pair[0], &pair[1], meshes.child_map(k + 1)))
            .collect::<Result<Vec<_>>>()?;
        let mean = spaces.last().unwrap().assemble_mean_vector();
        Ok(FemHierarchy {
            spaces,
            mass,
            stiffness,
            prolongations,
            mean,
        })
    }

    /// Hierarchy with finest mesh size `h = 2^-level`.
    pub fn with_finest_level(level: usize) -> Result<Self> {
        Self::new(&MeshHierarchy::with_finest_level(level))
    }

    /// The sub-hierarchy with levels `0..=finest`.
    pub fn truncated(&self, finest: usize) -> Result<Self> {
        if finest > self.finest_level() {
            return Err(Error::InvalidArgument(format!(
                "level {finest} exceeds finest level {}",
                self.finest_level()
            )));
        }
        let keep = finest + 1;
        Ok(FemHierarchy {
            spaces: self.spaces[..keep].to_vec(),
            mass: self.mass[..keep].to_vec(),
            stiffness: self.stiffness[..keep].to_vec(),
            prolongations: self.prolongations[..finest].to_vec(),
            mean: self.spaces[finest].assemble_mean_vector(),
        })
    }

    /// Maps coefficients on level `from` to the finest level.
    pub fn prolongate_to_finest(&self, from: usize, v: &[f64]) -> Result<CoeffVector> {
        if from > self.finest_level() {
            return Err(Error::InvalidArgument(format!("no level {from}")));
        }
        self.spaces[from].check_len(v)?;
        let mut out = v.to_vec();
        for p in &self.prolongations[from..] {
            out = p.mul_vec(&out);
        }
        Ok(out)
    }

    pub fn num_levels(&self) -> usize {
        self.spaces.len()
    }

    pub fn finest_level(&self) -> usize {
        self.spaces.len() - 1
    }

    pub fn space(&self) -> &P2Space {
        self.spaces.last().unwrap()
    }

    pub fn mass(&self) -> &CsrMatrix {
        self.mass.last().unwrap()
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        self.stiffness.last().unwrap()
    }

    /// Mean vector `c` on the finest level.
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn spaces(&self) -> &[P2Space] {
        &self.spaces
    }

    pub fn level_mass(&self, k: usize) -> &CsrMatrix {
        &self.mass[k]
    }

    pub fn level_stiffness(&self, k: usize) -> &CsrMatrix {
        &self.stiffness[k]
    }

    pub fn prolongations(&self) -> &[CsrMatrix] {
        &self.prolongations
    }

    /// `γ K_k + M_k` on every level, coarsest first.
    pub fn shifted_operators(&self, gamma: f64) -> Vec<CsrMatrix> {
        self.stiffness
            .iter()
            .zip(&self.mass)
            .map(|(k, m)| k.linear_combination(gamma, m, 1.0).expect("shared pattern"))
            .collect()
    }
}
