//! Geometric multigrid on nested P2 spaces.
//!
//! One V(2,2) cycle: two forward Gauss-Seidel sweeps, restriction of the
//! residual by `Pᵗ`, recursion (dense Cholesky on level 0), prolongation of
//! the correction and two backward Gauss-Seidel sweeps. Pairing forward pre-
//! with backward post-smoothing makes one cycle from a zero initial guess a
//! symmetric positive definite linear operator.

use nalgebra::{DMatrix, DVector, Dyn};

use super::{CsrMatrix, LinearOperator};
use crate::error::{Error, Result};
use crate::fem::{p2_basis, FemHierarchy, P2Space};
use crate::mesh::ChildMap;

/// Prolongation from a P2 space to the P2 space on its uniform refinement:
/// row `k` holds the coarse basis functions evaluated at fine node `k`.
pub fn build_prolongation(coarse: &P2Space, fine: &P2Space, child_map: &ChildMap) -> Result<CsrMatrix> {
    let (cm, fm) = (coarse.mesh(), fine.mesh());
    if fm.level() != cm.level() + 1
        || child_map.parent_triangle.len() != fm.num_triangles()
        || fm.num_triangles() != 4 * cm.num_triangles()
    {
        return Err(Error::NotParentChild(format!(
            "coarse level {} ({} triangles), fine level {} ({} triangles), map of {}",
            cm.level(),
            cm.num_triangles(),
            fm.level(),
            fm.num_triangles(),
            child_map.parent_triangle.len()
        )));
    }

    let mut rows: Vec<Option<Vec<(usize, f64)>>> = vec![None; fine.n_dof()];
    for (t, &parent) in child_map.parent_triangle.iter().enumerate() {
        let coarse_dofs = coarse.element_dofs(parent);
        for &k in fine.element_dofs(t) {
            if rows[k].is_some() {
                continue;
            }
            let l = cm.barycentric(parent, fine.node(k));
            if l.iter().any(|&x| x < -1e-12) {
                return Err(Error::NotParentChild(format!(
                    "fine node {k} lies outside its parent triangle {parent}"
                )));
            }
            let vals = p2_basis(l);
            let mut row: Vec<(usize, f64)> = coarse_dofs
                .iter()
                .zip(vals)
                .filter(|(_, v)| v.abs() > 1e-14)
                .map(|(&d, v)| (d, v))
                .collect();
            row.sort_by_key(|e| e.0);
            rows[k] = Some(row);
        }
    }

    let mut row_ptr = vec![0];
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    for row in rows {
        let row = row.ok_or_else(|| Error::NotParentChild("fine node not covered".into()))?;
        for (c, v) in row {
            col_idx.push(c);
            values.push(v);
        }
        row_ptr.push(col_idx.len());
    }
    CsrMatrix::from_parts(fine.n_dof(), coarse.n_dof(), row_ptr, col_idx, values)
}

/// One forward Gauss-Seidel sweep for `A x = b`, in increasing row order.
pub fn gauss_seidel_forward(a: &CsrMatrix, inv_diag: &[f64], b: &[f64], x: &mut [f64]) {
    for i in 0..a.nrows() {
        let (cols, vals) = a.row(i);
        let s: f64 = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        x[i] += (b[i] - s) * inv_diag[i];
    }
}

/// One backward Gauss-Seidel sweep, in decreasing row order.
pub fn gauss_seidel_backward(a: &CsrMatrix, inv_diag: &[f64], b: &[f64], x: &mut [f64]) {
    for i in (0..a.nrows()).rev() {
        let (cols, vals) = a.row(i);
        let s: f64 = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        x[i] += (b[i] - s) * inv_diag[i];
    }
}

/// Multigrid solver for an SPD operator given on every level of a nested hierarchy.
#[derive(Debug, Clone)]
pub struct MgHierarchy {
    operators: Vec<CsrMatrix>,
    inv_diags: Vec<Vec<f64>>,
    prolongations: Vec<CsrMatrix>,
    coarse: nalgebra::Cholesky<f64, Dyn>,
    pre_sweeps: usize,
    post_sweeps: usize,
}

impl MgHierarchy {
    /// `operators[k]` is the level-`k` matrix (coarsest first);
    /// `prolongations[k]` maps level `k` to level `k + 1`.
    pub fn new(operators: Vec<CsrMatrix>, prolongations: Vec<CsrMatrix>) -> Result<Self> {
        if operators.is_empty() || prolongations.len() + 1 != operators.len() {
            return Err(Error::InvalidArgument(format!(
                "{} level operators need {} prolongations, got {}",
                operators.len(),
                operators.len().saturating_sub(1),
                prolongations.len()
            )));
        }
        for (k, p) in prolongations.iter().enumerate() {
            if p.ncols() != operators[k].nrows() || p.nrows() != operators[k + 1].nrows() {
                return Err(Error::DimensionMismatch {
                    expected: operators[k + 1].nrows(),
                    actual: p.nrows(),
                });
            }
        }
        let inv_diags = operators
            .iter()
            .map(|a| a.diagonal().iter().map(|d| 1.0 / d).collect())
            .collect();
        let coarse = operators[0]
            .to_dense()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("coarsest-level operator".into()))?;
        Ok(MgHierarchy {
            operators,
            inv_diags,
            prolongations,
            coarse,
            pre_sweeps: 2,
            post_sweeps: 2,
        })
    }

    /// Multigrid for `γ K + M` on every level of `fem`.
    pub fn shifted(fem: &FemHierarchy, gamma: f64) -> Result<Self> {
        Self::new(fem.shifted_operators(gamma), fem.prolongations().to_vec())
    }

    pub fn num_levels(&self) -> usize {
        self.operators.len()
    }

    pub fn finest_level(&self) -> usize {
        self.operators.len() - 1
    }

    pub fn operator(&self, level: usize) -> &CsrMatrix {
        &self.operators[level]
    }

    /// One V-cycle on `level` for `A x = rhs`, updating `x` in place.
    pub fn vcycle(&self, level: usize, rhs: &[f64], x: &mut [f64]) {
        if level == 0 {
            let sol = self.coarse.solve(&DVector::from_column_slice(rhs));
            x.copy_from_slice(sol.as_slice());
            return;
        }
        let a = &self.operators[level];
        let inv_diag = &self.inv_diags[level];
        for _ in 0..self.pre_sweeps {
            gauss_seidel_forward(a, inv_diag, rhs, x);
        }
        let mut residual = a.mul_vec(x);
        for (r, b) in residual.iter_mut().zip(rhs) {
            *r = b - *r;
        }
        let p = &self.prolongations[level - 1];
        let mut coarse_rhs = vec![0.0; p.ncols()];
        p.matvec_transpose(&residual, &mut coarse_rhs);
        let mut coarse_x = vec![0.0; p.ncols()];
        self.vcycle(level - 1, &coarse_rhs, &mut coarse_x);
        p.matvec_add(1.0, &coarse_x, x);
        for _ in 0..self.post_sweeps {
            gauss_seidel_backward(a, inv_diag, rhs, x);
        }
    }

    /// `cycles` V-cycles on the finest level from a zero initial guess.
    pub fn solve_cycles(&self, rhs: &[f64], cycles: usize, x: &mut [f64]) {
        x.fill(0.0);
        for _ in 0..cycles {
            self.vcycle(self.finest_level(), rhs, x);
        }
    }

    pub fn coarse_dense(&self) -> DMatrix<f64> {
        self.operators[0].to_dense()
    }
}

/// Block-diagonal preconditioner `diag(τ^½/2 K + M, τ^½ε²/2 K + M)` whose
/// blocks are inverted approximately by a fixed number of V-cycles.
#[derive(Debug, Clone)]
pub struct BlockPreconditioner {
    pub block1: MgHierarchy,
    pub block2: MgHierarchy,
    pub cycles_per_application: usize,
}

impl BlockPreconditioner {
    pub fn new(fem: &FemHierarchy, tau: f64, eps: f64) -> Result<Self> {
        let gamma = 0.5 * tau.sqrt();
        Ok(BlockPreconditioner {
            block1: MgHierarchy::shifted(fem, gamma)?,
            block2: MgHierarchy::shifted(fem, gamma * eps * eps)?,
            cycles_per_application: 1,
        })
    }

    pub fn n(&self) -> usize {
        self.block1.operator(self.block1.finest_level()).nrows()
    }
}

impl LinearOperator for BlockPreconditioner {
    fn dim(&self) -> usize {
        2 * self.n()
    }

    fn apply(&self, r: &[f64], y: &mut [f64]) {
        let n = self.n();
        let (r1, r2) = r.split_at(n);
        let (y1, y2) = y.split_at_mut(n);
        self.block1.solve_cycles(r1, self.cycles_per_application, y1);
        self.block2.solve_cycles(r2, self.cycles_per_application, y2);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, norm2, operator_to_dense};
    use crate::mesh::MeshHierarchy;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn prolongation_reproduces_nested_functions() {
        let fem = FemHierarchy::with_finest_level(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (k, p) in fem.prolongations().iter().enumerate() {
            let (coarse, fine) = (&fem.spaces()[k], &fem.spaces()[k + 1]);
            for r in 0..p.nrows() {
                assert!(p.row(r).0.len() <= 6);
            }
            let ones = p.mul_vec(&vec![1.0; coarse.n_dof()]);
            assert!(ones.iter().all(|v| (v - 1.0).abs() < 1e-15));
            let f = |x: [f64; 2]| x[0] * x[1];
            let pv = p.mul_vec(&coarse.interpolate(f));
            let exact = fine.interpolate(f);
            assert!(pv.iter().zip(&exact).all(|(a, b)| (a - b).abs() < 1e-15));

            let (kc, kf) = (fem.level_stiffness(k), fem.level_stiffness(k + 1));
            for _ in 0..20 {
                let v = random_vec(coarse.n_dof(), &mut rng);
                let pv = p.mul_vec(&v);
                let (ec, ef) = (kc.bilinear(&v, &v), kf.bilinear(&pv, &pv));
                assert!((ec - ef).abs() <= 1e-12 * ec.max(1.0), "{ec} vs {ef}");
            }
        }
    }

    #[test]
    fn prolongation_rejects_unrelated_meshes() {
        let meshes = MeshHierarchy::new(3).unwrap();
        let s0 = P2Space::new(meshes.level(0).clone());
        let s2 = P2Space::new(meshes.level(2).clone());
        assert!(build_prolongation(&s0, &s2, meshes.child_map(2)).is_err());
    }

    #[test]
    fn gauss_seidel_matches_dense_triangular_solves() {
        let fem = FemHierarchy::with_finest_level(1).unwrap();
        let a = fem.shifted_operators(0.3).pop().unwrap();
        let n = a.nrows();
        let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
        let dense = a.to_dense();
        let lower = DMatrix::from_fn(n, n, |i, j| if j <= i { dense[(i, j)] } else { 0.0 });
        let upper = lower.transpose();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = random_vec(n, &mut rng);
        let x0 = random_vec(n, &mut rng);

        // Forward: (D + L) x1 = b - U x0, with U the strict upper part.
        let strict_upper = &upper - DMatrix::from_diagonal(&dense.diagonal());
        let rhs = DVector::from_column_slice(&b) - &strict_upper * DVector::from_column_slice(&x0);
        let expect = lower.clone().solve_lower_triangular(&rhs).unwrap();
        let mut x = x0.clone();
        gauss_seidel_forward(&a, &inv_diag, &b, &mut x);
        assert!((DVector::from_column_slice(&x) - expect).amax() < 1e-12);

        // As maps b ↦ x from a zero guess, backward = transpose of forward.
        let forward = |b: &[f64]| {
            let mut x = vec![0.0; n];
            gauss_seidel_forward(&a, &inv_diag, b, &mut x);
            x
        };
        let backward = |b: &[f64]| {
            let mut x = vec![0.0; n];
            gauss_seidel_backward(&a, &inv_diag, b, &mut x);
            x
        };
        let sf = DMatrix::from_fn(n, n, |i, j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            forward(&e)[i]
        });
        let sb = DMatrix::from_fn(n, n, |i, j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            backward(&e)[i]
        });
        assert!((sf.transpose() - sb).amax() < 1e-14);
    }

    #[test]
    fn vcycle_trivial_cases() {
        let fem = FemHierarchy::with_finest_level(3).unwrap();
        let mg = MgHierarchy::shifted(&fem, 0.01).unwrap();
        let n = fem.space().n_dof();
        let mut x = vec![0.0; n];
        mg.vcycle(3, &vec![0.0; n], &mut x);
        assert!(x.iter().all(|&v| v == 0.0));

        let n0 = fem.spaces()[0].n_dof();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random_vec(n0, &mut rng);
        let mut x = vec![0.0; n0];
        mg.vcycle(0, &b, &mut x);
        let r: Vec<f64> = mg.operator(0).mul_vec(&x).iter().zip(&b).map(|(a, b)| a - b).collect();
        assert!(norm2(&r) <= 1e-12);
    }

    #[test]
    fn vcycle_operator_is_symmetric_positive_definite() {
        let fem = FemHierarchy::with_finest_level(2).unwrap();
        let mg = MgHierarchy::shifted(&fem, 0.05).unwrap();
        let n = fem.space().n_dof();
        let apply = |r: &[f64]| {
            let mut x = vec![0.0; n];
            mg.solve_cycles(r, 1, &mut x);
            x
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let r = random_vec(n, &mut rng);
            let s = random_vec(n, &mut rng);
            let (a, b) = (dot(&apply(&r), &s), dot(&r, &apply(&s)));
            assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()));
        }
        for _ in 0..100 {
            let r = random_vec(n, &mut rng);
            assert!(dot(&apply(&r), &r) > 0.0);
        }
    }

    #[test]
    fn vcycle_contraction_is_level_independent() {
        let fem = FemHierarchy::with_finest_level(6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut factors = Vec::new();
        for level in 3..=6 {
            let ops: Vec<CsrMatrix> = fem.shifted_operators(0.01).into_iter().take(level + 1).collect();
            let mg = MgHierarchy::new(ops, fem.prolongations()[..level].to_vec()).unwrap();
            let a = mg.operator(level);
            let b = random_vec(a.nrows(), &mut rng);
            let mut x = vec![0.0; a.nrows()];
            let resid = |x: &[f64]| {
                let ax = a.mul_vec(x);
                norm2(&ax.iter().zip(&b).map(|(p, q)| p - q).collect::<Vec<_>>())
            };
            let mut prev = resid(&x);
            let mut rho = 0.0f64;
            for it in 0..8 {
                mg.vcycle(level, &b, &mut x);
                let r = resid(&x);
                if it >= 2 {
                    rho = rho.max(r / prev);
                }
                prev = r;
            }
            factors.push(rho);
        }
        let max = factors.iter().cloned().fold(0.0, f64::max);
        let min = factors.iter().cloned().fold(1.0, f64::min);
        assert!(max < 1.0, "{factors:?}");
        assert!(max - min <= 0.15, "{factors:?}");
    }

    #[test]
    fn block_preconditioner_is_linear_and_symmetric() {
        let fem = FemHierarchy::with_finest_level(3).unwrap();
        let p = BlockPreconditioner::new(&fem, 0.002 / 64.0, 0.05).unwrap();
        let n2 = p.dim();
        assert!(p.apply_vec(&vec![0.0; n2]).iter().all(|&v| v == 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let r = random_vec(n2, &mut rng);
            let s = random_vec(n2, &mut rng);
            let (a, b) = (dot(&p.apply_vec(&r), &s), dot(&r, &p.apply_vec(&s)));
            assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()));
        }
        let small = FemHierarchy::with_finest_level(1).unwrap();
        let p = BlockPreconditioner::new(&small, 0.1, 0.5).unwrap();
        let d = operator_to_dense(&p);
        assert!((&d - d.transpose()).amax() < 1e-12);
        assert!(d.symmetric_eigenvalues().min() > 0.0);
    }
}
