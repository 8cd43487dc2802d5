//! Sparse symmetric linear algebra for the Newton systems: CSR matrices,
//! rank-one augmented operators, the 2×2 block saddle operator, Krylov
//! solvers and the geometric multigrid preconditioner.

mod cg;
mod csr;
mod minres;
pub mod multigrid;
mod operators;

pub use cg::{conjugate_gradient, CgOutcome};
pub use csr::CsrMatrix;
pub use minres::{minres, MinresOutcome, MinresStatus};
pub use multigrid::{build_prolongation, BlockPreconditioner, MgHierarchy};
pub use operators::{projected_matvec_add, IdentityOperator, RankOneAugmented, SaddleOperator};

/// A linear map `y = A x` on `R^n`.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        y
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y)
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `y += a * x`.
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Materializes an operator as a dense matrix, column by column.
pub fn operator_to_dense<A: LinearOperator + ?Sized>(op: &A) -> nalgebra::DMatrix<f64> {
    let n = op.dim();
    let mut d = nalgebra::DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        d.column_mut(j).copy_from_slice(&col);
        e[j] = 0.0;
    }
    d
}
