use std::sync::Arc;

use super::quadrature::QuadratureRule;
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::mesh::{Mesh, Point};

/// Coefficients of a finite element function in the nodal basis.
pub type CoeffVector = Vec<f64>;

/// Continuous piecewise-quadratic Lagrange space on a triangulation.
///
/// Global numbering: vertex nodes occupy `[0, V)` in mesh vertex order, edge
/// midpoint nodes occupy `[V, V + E)` in mesh edge order. Local numbering on
/// a triangle `(v0, v1, v2)` is `[v0, v1, v2, m01, m12, m20]`.
#[derive(Debug, Clone)]
pub struct P2Space {
    mesh: Arc<Mesh>,
    element_dofs: Vec<[usize; 6]>,
    areas: Vec<f64>,
    lambda_grads: Vec<[[f64; 2]; 3]>,
    rule: QuadratureRule,
    /// `basis[q][i]`: value of local basis function `i` at quadrature point `q`.
    basis: Vec<[f64; 6]>,
    /// `basis_dlambda[q][i][j] = ∂N_i/∂λ_j` at quadrature point `q`.
    basis_dlambda: Vec<[[f64; 3]; 6]>,
    pattern: CsrMatrix,
    /// Position of local entry `(i, j)` (index `6 i + j`) in the CSR value array.
    element_slots: Vec<[usize; 36]>,
}

pub fn p2_basis(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

fn p2_basis_dlambda(l: [f64; 3]) -> [[f64; 3]; 6] {
    [
        [4.0 * l[0] - 1.0, 0.0, 0.0],
        [0.0, 4.0 * l[1] - 1.0, 0.0],
        [0.0, 0.0, 4.0 * l[2] - 1.0],
        [4.0 * l[1], 4.0 * l[0], 0.0],
        [0.0, 4.0 * l[2], 4.0 * l[1]],
        [4.0 * l[2], 0.0, 4.0 * l[0]],
    ]
}

impl P2Space {
    pub fn new(mesh: Arc<Mesh>) -> Self {
        let nv = mesh.num_vertices();
        let element_dofs: Vec<[usize; 6]> = mesh
            .triangles()
            .iter()
            .zip(mesh.triangle_edges())
            .map(|(t, e)| [t[0], t[1], t[2], nv + e[0], nv + e[1], nv + e[2]])
            .collect();

        let mut areas = Vec::with_capacity(mesh.num_triangles());
        let mut lambda_grads = Vec::with_capacity(mesh.num_triangles());
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let [p0, p1, p2] = tri.map(|v| mesh.vertices()[v]);
            let area = mesh.signed_area(t);
            let s = 1.0 / (2.0 * area);
            areas.push(area);
            lambda_grads.push([
                [(p1[1] - p2[1]) * s, (p2[0] - p1[0]) * s],
                [(p2[1] - p0[1]) * s, (p0[0] - p2[0]) * s],
                [(p0[1] - p1[1]) * s, (p1[0] - p0[0]) * s],
            ]);
        }

        let rule = QuadratureRule::degree8();
        let basis = rule.points.iter().map(|&l| p2_basis(l)).collect();
        let basis_dlambda = rule.points.iter().map(|&l| p2_basis_dlambda(l)).collect();

        let n_dof = nv + mesh.num_edges();
        let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); n_dof];
        for dofs in &element_dofs {
            for &i in dofs {
                neighbours[i].extend_from_slice(dofs);
            }
        }
        let mut row_ptr = Vec::with_capacity(n_dof + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for row in neighbours.iter_mut() {
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        let pattern = CsrMatrix::from_parts(n_dof, n_dof, row_ptr, col_idx, vec![0.0; nnz])
            .expect("pattern built from sorted rows");

        let element_slots = element_dofs
            .iter()
            .map(|dofs| {
                let mut slots = [0; 36];
                for (i, &gi) in dofs.iter().enumerate() {
                    let (cols, _) = pattern.row(gi);
                    let base = pattern.row_ptr()[gi];
                    for (j, &gj) in dofs.iter().enumerate() {
                        slots[6 * i + j] = base + cols.binary_search(&gj).unwrap();
                    }
                }
                slots
            })
            .collect();

        P2Space {
            mesh,
            element_dofs,
            areas,
            lambda_grads,
            rule,
            basis,
            basis_dlambda,
            pattern,
            element_slots,
        }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn n_dof(&self) -> usize {
        self.pattern.nrows()
    }

    pub fn num_triangles(&self) -> usize {
        self.element_dofs.len()
    }

    pub fn element_dofs(&self, t: usize) -> &[usize; 6] {
        &self.element_dofs[t]
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.rule
    }

    /// Coordinates of global node `dof`.
    pub fn node(&self, dof: usize) -> Point {
        let nv = self.mesh.num_vertices();
        if dof < nv {
            self.mesh.vertices()[dof]
        } else {
            self.mesh.edge_midpoint(dof - nv)
        }
    }

    pub fn nodes(&self) -> Vec<Point> {
        (0..self.n_dof()).map(|k| self.node(k)).collect()
    }

    /// Physical location of quadrature point `q` in triangle `t`.
    pub fn quadrature_point(&self, t: usize, q: usize) -> Point {
        let tri = self.mesh.triangles()[t];
        let l = self.rule.points[q];
        let v = self.mesh.vertices();
        let mut p = [0.0; 2];
        for k in 0..3 {
            p[0] += l[k] * v[tri[k]][0];
            p[1] += l[k] * v[tri[k]][1];
        }
        p
    }

    pub fn local_coeffs(&self, t: usize, v: &[f64]) -> [f64; 6] {
        self.element_dofs[t].map(|d| v[d])
    }

    /// Value at quadrature point `q` of the function with local coefficients `local`.
    pub fn value_at(&self, q: usize, local: &[f64; 6]) -> f64 {
        self.basis[q].iter().zip(local).map(|(b, c)| b * c).sum()
    }

    /// Gradients of the six local basis functions of triangle `t` at point `q`.
    pub fn basis_gradients(&self, t: usize, q: usize) -> [[f64; 2]; 6] {
        let g = &self.lambda_grads[t];
        self.basis_dlambda[q].map(|d| {
            [
                d[0] * g[0][0] + d[1] * g[1][0] + d[2] * g[2][0],
                d[0] * g[0][1] + d[1] * g[1][1] + d[2] * g[2][1],
            ]
        })
    }

    pub fn gradient_at(&self, t: usize, q: usize, local: &[f64; 6]) -> [f64; 2] {
        let grads = self.basis_gradients(t, q);
        let mut g = [0.0; 2];
        for (gi, c) in grads.iter().zip(local) {
            g[0] += c * gi[0];
            g[1] += c * gi[1];
        }
        g
    }

    pub(crate) fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n_dof() {
            return Err(Error::DimensionMismatch {
                expected: self.n_dof(),
                actual: v.len(),
            });
        }
        Ok(())
    }

    /// Sums `local(t)` (a symmetric 6×6 element matrix, row-major) into the
    /// global pattern, triangle by triangle.
    fn assemble_matrix<F>(&self, mut local: F) -> CsrMatrix
    where
        F: FnMut(usize) -> [f64; 36],
    {
        let mut m = self.pattern.zeros_like();
        let values = m.values_mut();
        for (t, slots) in self.element_slots.iter().enumerate() {
            let a = local(t);
            for (slot, v) in slots.iter().zip(a.iter()) {
                values[*slot] += v;
            }
        }
        m
    }

    /// Weighted mass matrix `(w φ_k, φ_l)` for a weight given at quadrature
    /// points, `weight(t, q)`.
    pub fn assemble_weighted_mass<W>(&self, mut weight: W) -> CsrMatrix
    where
        W: FnMut(usize, usize) -> f64,
    {
        self.assemble_matrix(|t| {
            let mut a = [0.0; 36];
            for (q, (b, w)) in self.basis.iter().zip(&self.rule.weights).enumerate() {
                let s = w * self.areas[t] * weight(t, q);
                for i in 0..6 {
                    for j in i..6 {
                        a[6 * i + j] += s * b[i] * b[j];
                    }
                }
            }
            symmetrize(&mut a);
            a
        })
    }

    pub fn assemble_mass(&self) -> CsrMatrix {
        self.assemble_weighted_mass(|_, _| 1.0)
    }

    pub fn assemble_stiffness(&self) -> CsrMatrix {
        self.assemble_matrix(|t| {
            let mut a = [0.0; 36];
            for (q, w) in self.rule.weights.iter().enumerate() {
                let g = self.basis_gradients(t, q);
                let s = w * self.areas[t];
                for i in 0..6 {
                    for j in i..6 {
                        a[6 * i + j] += s * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                    }
                }
            }
            symmetrize(&mut a);
            a
        })
    }

    /// `J(k, l) = ((3a² + 2ab + b²) φ_k, φ_l)` for `a = phi_curr`, `b = phi_prev`.
    pub fn assemble_j(&self, phi_curr: &[f64], phi_prev: &[f64]) -> Result<CsrMatrix> {
        self.check_len(phi_curr)?;
        self.check_len(phi_prev)?;
        let mut cache: Option<(usize, [f64; 6], [f64; 6])> = None;
        Ok(self.assemble_weighted_mass(|t, q| {
            let (la, lb) = match cache {
                Some((ct, la, lb)) if ct == t => (la, lb),
                _ => {
                    let la = self.local_coeffs(t, phi_curr);
                    let lb = self.local_coeffs(t, phi_prev);
                    cache = Some((t, la, lb));
                    (la, lb)
                }
            };
            let a = self.value_at(q, &la);
            let b = self.value_at(q, &lb);
            3.0 * a * a + 2.0 * a * b + b * b
        }))
    }

    /// Load vector `(g, φ_k)` for an integrand given at quadrature points, `g(t, q)`.
    pub fn assemble_load<G>(&self, mut g: G) -> CoeffVector
    where
        G: FnMut(usize, usize) -> f64,
    {
        let mut out = vec![0.0; self.n_dof()];
        for (t, dofs) in self.element_dofs.iter().enumerate() {
            let mut local = [0.0; 6];
            for (q, (b, w)) in self.basis.iter().zip(&self.rule.weights).enumerate() {
                let s = w * self.areas[t] * g(t, q);
                for i in 0..6 {
                    local[i] += s * b[i];
                }
            }
            for (d, l) in dofs.iter().zip(local) {
                out[*d] += l;
            }
        }
        out
    }

    /// Load vector `(G, ∇φ_k)` for a vector integrand given at quadrature points.
    pub fn assemble_gradient_load<G>(&self, mut g: G) -> CoeffVector
    where
        G: FnMut(usize, usize) -> [f64; 2],
    {
        let mut out = vec![0.0; self.n_dof()];
        for (t, dofs) in self.element_dofs.iter().enumerate() {
            let mut local = [0.0; 6];
            for (q, w) in self.rule.weights.iter().enumerate() {
                let grads = self.basis_gradients(t, q);
                let v = g(t, q);
                let s = w * self.areas[t];
                for i in 0..6 {
                    local[i] += s * (v[0] * grads[i][0] + v[1] * grads[i][1]);
                }
            }
            for (d, l) in dofs.iter().zip(local) {
                out[*d] += l;
            }
        }
        out
    }

    /// The mean vector `c(k) = (φ_k, 1)`.
    pub fn assemble_mean_vector(&self) -> CoeffVector {
        self.assemble_load(|_, _| 1.0)
    }

    /// `∫_Ω g` for an integrand given at quadrature points.
    pub fn integrate<G>(&self, mut g: G) -> f64
    where
        G: FnMut(usize, usize) -> f64,
    {
        let mut total = 0.0;
        for t in 0..self.num_triangles() {
            let mut local = 0.0;
            for (q, w) in self.rule.weights.iter().enumerate() {
                local += w * g(t, q);
            }
            total += self.areas[t] * local;
        }
        total
    }

    /// `∫_Ω f(v_1, ..., v_k)` where the `v_i` are finite element functions.
    pub fn integrate_fe<F>(&self, fields: &[&[f64]], mut f: F) -> f64
    where
        F: FnMut(&[f64]) -> f64,
    {
        let mut vals = vec![0.0; fields.len()];
        let mut locals = vec![[0.0; 6]; fields.len()];
        let mut total = 0.0;
        for t in 0..self.num_triangles() {
            for (l, v) in locals.iter_mut().zip(fields) {
                *l = self.local_coeffs(t, v);
            }
            let mut local = 0.0;
            for (q, w) in self.rule.weights.iter().enumerate() {
                for (val, l) in vals.iter_mut().zip(&locals) {
                    *val = self.value_at(q, l);
                }
                local += w * f(&vals);
            }
            total += self.areas[t] * local;
        }
        total
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate<F: Fn(Point) -> f64>(&self, f: F) -> CoeffVector {
        (0..self.n_dof()).map(|k| f(self.node(k))).collect()
    }
}

fn symmetrize(a: &mut [f64; 36]) {
    for i in 0..6 {
        for j in 0..i {
            a[6 * i + j] = a[6 * j + i];
        }
    }
}
