use super::{dot, CsrMatrix, LinearOperator};

/// `A + v vᵗ`, applied without forming the dense rank-one term.
#[derive(Debug, Clone, Copy)]
pub struct RankOneAugmented<'a> {
    pub base: &'a CsrMatrix,
    pub vector: &'a [f64],
}

impl<'a> RankOneAugmented<'a> {
    pub fn new(base: &'a CsrMatrix, vector: &'a [f64]) -> Self {
        assert_eq!(base.nrows(), vector.len());
        RankOneAugmented { base, vector }
    }

    /// `y += alpha (A + v vᵗ) x`.
    pub fn apply_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        self.base.matvec_add(alpha, x, y);
        let s = alpha * dot(self.vector, x);
        for (yi, vi) in y.iter_mut().zip(self.vector) {
            *yi += s * vi;
        }
    }
}

impl LinearOperator for RankOneAugmented<'_> {
    fn dim(&self) -> usize {
        self.vector.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        self.apply_add(1.0, x, y);
    }
}

/// The symmetric indefinite block operator
///
/// ```text
/// [ a (K + c cᵗ)              M                        ]
/// [ M               -(j J + k (K + c cᵗ))              ]
/// ```
///
/// acting on stacked vectors `(u, p)` of length `2n`. With `a = τ^½/2`,
/// `j = τ^½/2` and `k = 3τ^½ε²/2` this is the scaled Newton matrix; with
/// `J = 6M` it is the model matrix used in the spectral analysis.
///
/// When `j_projection` holds `c`, `J` is replaced by `Πᵗ J Π` with
/// `Π = I - 1 cᵗ / (cᵗ1)`, so that `J` only couples mean-zero functions.
#[derive(Debug, Clone, Copy)]
pub struct SaddleOperator<'a> {
    pub stiffness: RankOneAugmented<'a>,
    pub mass: &'a CsrMatrix,
    pub j_block: &'a CsrMatrix,
    pub j_projection: Option<&'a [f64]>,
    pub first_coeff: f64,
    pub j_coeff: f64,
    pub k_coeff: f64,
}

impl<'a> SaddleOperator<'a> {
    /// Scaled Newton matrix; `stiffness_weight` is 3/4 for the two-step
    /// scheme and 1/2 for the starting step.
    pub fn newton(
        tau: f64,
        eps: f64,
        stiffness_weight: f64,
        stiffness: RankOneAugmented<'a>,
        mass: &'a CsrMatrix,
        jacobian: &'a CsrMatrix,
    ) -> Self {
        let half_root_tau = 0.5 * tau.sqrt();
        SaddleOperator {
            stiffness,
            mass,
            j_block: jacobian,
            j_projection: None,
            first_coeff: half_root_tau,
            j_coeff: half_root_tau,
            k_coeff: 2.0 * tau.sqrt() * eps * eps * stiffness_weight,
        }
    }

    /// The model matrix with `J` replaced by `6M`; pass `6M` as `six_mass`.
    pub fn model(
        tau: f64,
        eps: f64,
        stiffness: RankOneAugmented<'a>,
        mass: &'a CsrMatrix,
        six_mass: &'a CsrMatrix,
    ) -> Self {
        Self::newton(tau, eps, 0.75, stiffness, mass, six_mass)
    }

    pub fn with_mean_projection(mut self, c: &'a [f64]) -> Self {
        assert_eq!(c.len(), self.n());
        self.j_projection = Some(c);
        self
    }

    pub fn n(&self) -> usize {
        self.mass.nrows()
    }
}

/// `y += alpha Πᵗ J Π x` with `Π = I - 1 cᵗ / (cᵗ1)`.
pub fn projected_matvec_add(j: &CsrMatrix, c: &[f64], alpha: f64, x: &[f64], y: &mut [f64]) {
    let total: f64 = c.iter().sum();
    let shift = dot(c, x) / total;
    let px: Vec<f64> = x.iter().map(|v| v - shift).collect();
    let jx = j.mul_vec(&px);
    let back = jx.iter().sum::<f64>() / total;
    for ((yi, ji), ci) in y.iter_mut().zip(&jx).zip(c) {
        *yi += alpha * (ji - ci * back);
    }
}

impl LinearOperator for SaddleOperator<'_> {
    fn dim(&self) -> usize {
        2 * self.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n();
        let (xu, xp) = x.split_at(n);
        let (yu, yp) = y.split_at_mut(n);
        self.mass.matvec(xp, yu);
        self.stiffness.apply_add(self.first_coeff, xu, yu);
        self.mass.matvec(xu, yp);
        match self.j_projection {
            Some(c) => projected_matvec_add(self.j_block, c, -self.j_coeff, xp, yp),
            None => self.j_block.matvec_add(-self.j_coeff, xp, yp),
        }
        self.stiffness.apply_add(-self.k_coeff, xp, yp);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IdentityOperator(pub usize);

impl LinearOperator for IdentityOperator {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
}
