//! Time integration of the second-order convex-splitting scheme.
//!
//! The concentration is advanced in mean-zero form: `φ = φ̄₀ + φ̊` with the
//! mean `φ̄₀` fixed by the initial data, and `μ = μ̄ + μ̊` where the constant
//! `μ̄` is recovered after each step. Each step is a Newton iteration whose
//! linear systems are posed on the full space (the mean constraint replaced
//! by `c cᵗ` terms), rescaled to a symmetric saddle-point system and solved
//! with preconditioned MINRES.

mod energy;
mod newton;

pub use energy::{energy_law_residuals, first_step_energy_inequality, EnergyInequality};
pub use newton::{from_scaled, mu_scale, to_scaled, NewtonDirection, NewtonSystem};

use std::time::Instant;

use crate::error::{Error, Result};
use crate::fem::{self, CoeffVector, FemHierarchy, P2Space};
use crate::linalg::{dot, norm_inf, BlockPreconditioner};
use crate::presets::InitialField;

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeParams {
    pub eps: f64,
    pub tau: f64,
    pub final_time: f64,
    pub newton_linf_tol: f64,
    pub newton_residual_tol: f64,
    pub minres_tol: f64,
    pub minres_maxit: usize,
    pub max_newton: usize,
    pub initial_guess: InitialGuess,
}

/// Starting iterate of the Newton iteration in the two-step scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialGuess {
    /// `φ^m` and `μ^{m-1/2}`.
    Previous,
    /// `2φ^m - φ^{m-1}` and `2μ^{m-1/2} - μ^{m-3/2}` once the history exists.
    Extrapolated,
}

impl SchemeParams {
    pub fn new(eps: f64, tau: f64, final_time: f64) -> Result<Self> {
        let p = SchemeParams {
            eps,
            tau,
            final_time,
            newton_linf_tol: 1e-15,
            newton_residual_tol: 1e-7,
            minres_tol: 1e-7,
            minres_maxit: 1000,
            max_newton: 20,
            initial_guess: InitialGuess::Extrapolated,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v > 0.0 && v <= 1.0;
        if !in_unit(self.eps) {
            return Err(Error::InvalidArgument(format!("eps = {} not in (0, 1]", self.eps)));
        }
        if !in_unit(self.tau) {
            return Err(Error::InvalidArgument(format!("tau = {} not in (0, 1]", self.tau)));
        }
        if !(self.final_time >= 0.0 && self.final_time.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "final time {} must be non-negative",
                self.final_time
            )));
        }
        let tols = [self.newton_linf_tol, self.newton_residual_tol, self.minres_tol];
        if tols.iter().any(|&t| t.is_nan() || t <= 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if self.minres_maxit == 0 || self.max_newton == 0 {
            return Err(Error::InvalidArgument("iteration limits must be positive".into()));
        }
        Ok(())
    }

    /// Number of steps to reach `final_time`; it must be an integer multiple of `tau`.
    pub fn num_steps(&self) -> Result<usize> {
        let n = (self.final_time / self.tau).round();
        if (n * self.tau - self.final_time).abs() > 1e-9 * self.final_time.max(self.tau) {
            return Err(Error::InvalidArgument(format!(
                "final time {} is not a multiple of tau {}",
                self.final_time, self.tau
            )));
        }
        Ok(n as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// `φ⁰ = R_h φ₀`, `μ⁰ = R_h μ₀` with `μ₀ = ε⁻¹(φ₀³ - φ₀) - εΔφ₀`.
    Ritz,
    /// `φ⁰ = I_h φ₀`; `μ⁰` from `(μ⁰, ψ) = ε⁻¹(φ⁰³ - φ⁰, ψ) + ε a(φ⁰, ψ)`.
    Interpolate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeState {
    /// `φ^m`.
    pub phi_curr: CoeffVector,
    /// `φ^{m-1}`; absent before the first step.
    pub phi_prev: Option<CoeffVector>,
    /// `μ^{m-1/2}`, or `μ⁰` before the first step.
    pub mu_half_prev: CoeffVector,
    /// `μ^{m-3/2}`; present from the third step on.
    pub mu_half_prev2: Option<CoeffVector>,
    pub mean_phi0: f64,
    pub step_index: usize,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step_index: usize,
    pub time: f64,
    pub newton_iterations: usize,
    /// MINRES iterations of each Newton solve in this step.
    pub minres_iterations: Vec<usize>,
    pub newton_residual: f64,
    pub energy: f64,
    /// `F(φ^{m+1}, φ^m)`.
    pub modified_energy: f64,
    pub mass: f64,
    pub max_abs_phi: f64,
    /// `τε ‖∇μ^{m+1/2}‖²`.
    pub chemical_dissipation: f64,
    /// `‖φ^{m+1} - 2φ^m + φ^{m-1}‖² / 4ε + ε ‖∇(⋯)‖² / 8`; zero for the first step.
    pub numerical_dissipation: f64,
    pub wall_seconds: f64,
}

impl StepRecord {
    pub fn minres_total(&self) -> usize {
        self.minres_iterations.iter().sum()
    }
}

#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub iterations: usize,
    pub minres_iterations: Vec<usize>,
    /// `‖δ_j φ‖_∞` of each update.
    pub increments: Vec<f64>,
    /// Residual norms, starting with the initial guess.
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    pub phi_next: CoeffVector,
    pub mu_half: CoeffVector,
    pub record: StepRecord,
    pub newton: NewtonReport,
}

/// Data that fixes the nonlinear system of one step.
#[derive(Debug, Clone, Copy)]
pub enum StepKind<'a> {
    /// Start step: needs `μ⁰`.
    First { mu0: &'a [f64] },
    /// Two-step scheme: needs `φ^{m-1}`.
    Regular { phi_prev: &'a [f64] },
}

/// Newton/MINRES solver for the scheme on a fixed hierarchy and parameter set.
pub struct CahnHilliardSolver<'a> {
    fem: &'a FemHierarchy,
    params: SchemeParams,
    precond: BlockPreconditioner,
    ones_mean: f64,
}

impl<'a> CahnHilliardSolver<'a> {
    pub fn new(fem: &'a FemHierarchy, params: SchemeParams) -> Result<Self> {
        params.validate()?;
        let precond = BlockPreconditioner::new(fem, params.tau, params.eps)?;
        let ones_mean = fem.mean().iter().sum();
        Ok(CahnHilliardSolver {
            fem,
            params,
            precond,
            ones_mean,
        })
    }

    pub fn fem(&self) -> &FemHierarchy {
        self.fem
    }

    pub fn space(&self) -> &P2Space {
        self.fem.space()
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn preconditioner(&self) -> &BlockPreconditioner {
        &self.precond
    }

    /// `(v, 1) / |Ω|`.
    pub fn mean_of(&self, v: &[f64]) -> f64 {
        dot(self.fem.mean(), v) / self.ones_mean
    }

    /// `v - mean(v)`.
    pub fn mean_zero_part(&self, v: &[f64]) -> CoeffVector {
        let m = self.mean_of(v);
        v.iter().map(|x| x - m).collect()
    }

    fn project_mean_zero(&self, v: &mut [f64]) {
        let m = self.mean_of(v);
        v.iter_mut().for_each(|x| *x -= m);
    }

    /// Removes the constant-mode component of a residual functional, so that
    /// it vanishes on constants: `r(φ_k) - (φ_k, 1) r(1) / |Ω|`.
    fn remove_constant_mode(&self, r: &mut [f64]) {
        let r_one: f64 = r.iter().sum();
        let scale = r_one / self.ones_mean;
        for (ri, ci) in r.iter_mut().zip(self.fem.mean()) {
            *ri -= ci * scale;
        }
    }

    pub fn initialize(&self, field: &dyn InitialField, mode: InitMode) -> Result<SchemeState> {
        let (phi0, mu0) = initialize_fields(self.fem, field, self.params.eps, mode)?;
        let mean_phi0 = self.mean_of(&phi0);
        Ok(SchemeState {
            phi_curr: phi0,
            phi_prev: None,
            mu_half_prev: mu0,
            mu_half_prev2: None,
            mean_phi0,
            step_index: 0,
            time: 0.0,
        })
    }

    /// Assembles the Newton system at the iterate `(φ̊_j, μ̊_j)`.
    pub fn newton_system(
        &self,
        kind: StepKind<'_>,
        phi_curr: &[f64],
        mean_phi0: f64,
        phi_ring: &[f64],
        mu_ring: &[f64],
    ) -> Result<NewtonSystem> {
        let (f, g) = self.residual(kind, phi_curr, mean_phi0, phi_ring, mu_ring);
        let phi_full: Vec<f64> = phi_ring.iter().map(|v| v + mean_phi0).collect();
        let jacobian = self.space().assemble_j(&phi_full, phi_curr)?;
        let stiffness_weight = match kind {
            StepKind::First { .. } => 0.5,
            StepKind::Regular { .. } => 0.75,
        };
        Ok(NewtonSystem {
            f,
            g,
            jacobian,
            stiffness_weight,
        })
    }

    /// Residual functionals `(F̃_j, G̃_j)` against the nodal basis.
    fn residual(
        &self,
        kind: StepKind<'_>,
        phi_curr: &[f64],
        mean_phi0: f64,
        phi_ring: &[f64],
        mu_ring: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let (eps, tau) = (self.params.eps, self.params.tau);
        let (m, k) = (self.fem.mass(), self.fem.stiffness());
        let n = phi_ring.len();
        let phi_m_ring: Vec<f64> = phi_curr.iter().map(|v| v - mean_phi0).collect();

        // F = τε K μ̊ + M (φ̊_j - φ̊^m)
        let diff: Vec<f64> = phi_ring.iter().zip(&phi_m_ring).map(|(a, b)| a - b).collect();
        let mut f = m.mul_vec(&diff);
        k.matvec_add(tau * eps, mu_ring, &mut f);

        // G = M μ̊ - [ε⁻¹ (χ, ψ) - ε⁻¹ (explicit, ψ) + ε a(implicit, ψ) + extra]
        let phi_full: Vec<f64> = phi_ring.iter().map(|v| v + mean_phi0).collect();
        let chi = chi_load(self.space(), &phi_full, phi_curr);
        let mut g = m.mul_vec(mu_ring);
        for (gi, ci) in g.iter_mut().zip(&chi) {
            *gi -= ci / eps;
        }
        let (explicit, implicit): (Vec<f64>, Vec<f64>) = match kind {
            StepKind::First { mu0 } => {
                k.matvec_add(-0.5 * tau, mu0, &mut g);
                let implicit = (0..n).map(|i| 0.5 * phi_ring[i] + 0.5 * phi_m_ring[i]).collect();
                (phi_m_ring.clone(), implicit)
            }
            StepKind::Regular { phi_prev } => {
                let prev_ring: Vec<f64> = phi_prev.iter().map(|v| v - mean_phi0).collect();
                let explicit = (0..n).map(|i| 1.5 * phi_m_ring[i] - 0.5 * prev_ring[i]).collect();
                let implicit = (0..n).map(|i| 0.75 * phi_ring[i] + 0.25 * prev_ring[i]).collect();
                (explicit, implicit)
            }
        };
        m.matvec_add(1.0 / eps, &explicit, &mut g);
        k.matvec_add(-eps, &implicit, &mut g);

        self.remove_constant_mode(&mut f);
        self.remove_constant_mode(&mut g);
        (f, g)
    }

    /// Newton iteration for `(φ̊^{m+1}, μ̊^{m+1/2})` from the given guess.
    /// Stops when `‖δφ‖_∞` or the residual norm drops below its tolerance.
    pub fn newton_solve(
        &self,
        kind: StepKind<'_>,
        phi_curr: &[f64],
        mean_phi0: f64,
        mut phi_ring: CoeffVector,
        mut mu_ring: CoeffVector,
    ) -> Result<(CoeffVector, CoeffVector, NewtonReport)> {
        let p = &self.params;
        let mut report = NewtonReport {
            iterations: 0,
            minres_iterations: Vec::new(),
            increments: Vec::new(),
            residuals: Vec::new(),
        };
        loop {
            let system = self.newton_system(kind, phi_curr, mean_phi0, &phi_ring, &mu_ring)?;
            let r = system.residual_norm();
            report.residuals.push(r);
            if r <= p.newton_residual_tol {
                break;
            }
            if report.iterations == p.max_newton {
                return Err(Error::NewtonNotConverged {
                    iterations: report.iterations,
                    residual: r,
                });
            }
            let dir = system.solve(self.fem, p, &self.precond, p.minres_tol)?;
            for (x, d) in mu_ring.iter_mut().zip(&dir.dmu) {
                *x -= d;
            }
            for (x, d) in phi_ring.iter_mut().zip(&dir.dphi) {
                *x -= d;
            }
            self.project_mean_zero(&mut mu_ring);
            self.project_mean_zero(&mut phi_ring);
            report.iterations += 1;
            report.minres_iterations.push(dir.minres_iterations);
            let inc = norm_inf(&dir.dphi);
            report.increments.push(inc);
            if inc <= p.newton_linf_tol {
                break;
            }
        }
        Ok((phi_ring, mu_ring, report))
    }

    /// Solves the start step from `φ⁰, μ⁰`.
    pub fn first_step(&self, state: &SchemeState) -> Result<StepOutput> {
        if state.phi_prev.is_some() {
            return Err(Error::InvalidArgument("first step needs an initial state".into()));
        }
        let kind = StepKind::First {
            mu0: &state.mu_half_prev,
        };
        self.step(state, kind)
    }

    /// Solves one step of the two-step scheme from `φ^m, φ^{m-1}`.
    pub fn time_step(&self, state: &SchemeState) -> Result<StepOutput> {
        let phi_prev = state
            .phi_prev
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("two-step scheme needs φ^{m-1}".into()))?;
        self.step(state, StepKind::Regular { phi_prev })
    }

    fn step(&self, state: &SchemeState, kind: StepKind<'_>) -> Result<StepOutput> {
        let start = Instant::now();
        let (eps, tau) = (self.params.eps, self.params.tau);
        let phi_guess = match kind {
            StepKind::Regular { phi_prev } if self.params.initial_guess == InitialGuess::Extrapolated => {
                let e: Vec<f64> = state.phi_curr.iter().zip(phi_prev).map(|(a, b)| 2.0 * a - b).collect();
                self.mean_zero_part(&e)
            }
            _ => self.mean_zero_part(&state.phi_curr),
        };
        let extrapolate = self.params.initial_guess == InitialGuess::Extrapolated;
        let mu_guess = match (&state.mu_half_prev2, extrapolate) {
            (Some(old), true) => {
                let e: Vec<f64> = state.mu_half_prev.iter().zip(old).map(|(a, b)| 2.0 * a - b).collect();
                self.mean_zero_part(&e)
            }
            _ => self.mean_zero_part(&state.mu_half_prev),
        };
        let (phi_ring, mu_ring, newton) =
            self.newton_solve(kind, &state.phi_curr, state.mean_phi0, phi_guess, mu_guess)?;

        let mu_mean = recover_mu_mean(self.space(), &phi_ring, &state.phi_curr, state.mean_phi0, eps);
        let phi_next: CoeffVector = phi_ring.iter().map(|v| v + state.mean_phi0).collect();
        let mu_half: CoeffVector = mu_ring.iter().map(|v| v + mu_mean).collect();
        let wall_seconds = start.elapsed().as_secs_f64();

        let space = self.space();
        let (m, k) = (self.fem.mass(), self.fem.stiffness());
        let numerical_dissipation = match kind {
            StepKind::First { .. } => 0.0,
            StepKind::Regular { phi_prev } => {
                let d2: Vec<f64> = (0..phi_next.len())
                    .map(|i| phi_next[i] - 2.0 * state.phi_curr[i] + phi_prev[i])
                    .collect();
                m.bilinear(&d2, &d2) / (4.0 * eps) + eps * k.bilinear(&d2, &d2) / 8.0
            }
        };
        let record = StepRecord {
            step_index: state.step_index + 1,
            time: (state.step_index + 1) as f64 * tau,
            newton_iterations: newton.iterations,
            minres_iterations: newton.minres_iterations.clone(),
            newton_residual: *newton.residuals.last().unwrap(),
            energy: fem::integrate_energy(space, &phi_next, eps),
            modified_energy: fem::integrate_modified_energy(space, &phi_next, &state.phi_curr, eps),
            mass: dot(self.fem.mean(), &phi_next),
            max_abs_phi: norm_inf(&phi_next),
            chemical_dissipation: tau * eps * k.bilinear(&mu_half, &mu_half),
            numerical_dissipation,
            wall_seconds,
        };
        Ok(StepOutput {
            phi_next,
            mu_half,
            record,
            newton,
        })
    }

    /// Advances `state` by one step (start step first, then the two-step scheme).
    pub fn advance(&self, state: &mut SchemeState) -> Result<StepRecord> {
        let out = if state.phi_prev.is_none() {
            self.first_step(state)?
        } else {
            self.time_step(state)?
        };
        let phi_old = std::mem::replace(&mut state.phi_curr, out.phi_next);
        state.phi_prev = Some(phi_old);
        let mu_old = std::mem::replace(&mut state.mu_half_prev, out.mu_half);
        if state.step_index > 0 {
            state.mu_half_prev2 = Some(mu_old);
        }
        state.step_index += 1;
        state.time = out.record.time;
        Ok(out.record)
    }
}

/// `(χ(a, b), φ_k)` with `χ(a, b) = ½ (a² + b²) (a + b) / 2`.
pub fn chi_load(space: &P2Space, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut cache: Option<(usize, [f64; 6], [f64; 6])> = None;
    space.assemble_load(|t, q| {
        let (la, lb) = match cache {
            Some((ct, la, lb)) if ct == t => (la, lb),
            _ => {
                let v = (space.local_coeffs(t, a), space.local_coeffs(t, b));
                cache = Some((t, v.0, v.1));
                v
            }
        };
        let (x, y) = (space.value_at(q, &la), space.value_at(q, &lb));
        chi(x, y)
    })
}

pub fn chi(a: f64, b: f64) -> f64 {
    0.25 * (a * a + b * b) * (a + b)
}

/// The constant `μ̄^{m+1/2}` with `(μ̄, 1) = ε⁻¹ (χ(φ̊^{m+1} + φ̄₀, φ^m) - φ̄₀, 1)`.
/// `phi_curr` is the full `φ^m`.
pub fn recover_mu_mean(space: &P2Space, phi_ring_next: &[f64], phi_curr: &[f64], mean_phi0: f64, eps: f64) -> f64 {
    let next: Vec<f64> = phi_ring_next.iter().map(|v| v + mean_phi0).collect();
    let chi_int = space.integrate_fe(&[&next, phi_curr], |v| chi(v[0], v[1]));
    let area = space.integrate(|_, _| 1.0);
    (chi_int - mean_phi0 * area) / (eps * area)
}

/// Discrete initial data `(φ⁰, μ⁰)`.
pub fn initialize_fields(
    fem: &FemHierarchy,
    field: &dyn InitialField,
    eps: f64,
    mode: InitMode,
) -> Result<(CoeffVector, CoeffVector)> {
    let space = fem.space();
    match mode {
        InitMode::Interpolate => {
            let phi0 = space.interpolate(|p| field.value(p));
            let mut rhs = space.assemble_load(|t, q| {
                let v = space.value_at(q, &space.local_coeffs(t, &phi0));
                (v * v * v - v) / eps
            });
            fem.stiffness().matvec_add(eps, &phi0, &mut rhs);
            let mu0 = fem::mass_solve(fem.mass(), &rhs)?;
            Ok((phi0, mu0))
        }
        InitMode::Ritz => {
            let probe = [0.5, 0.5];
            if field.gradient(probe).is_none() {
                return Err(Error::MissingDerivatives("gradient of φ₀"));
            }
            if field.laplacian(probe).is_none() || field.laplacian_gradient(probe).is_none() {
                return Err(Error::MissingDerivatives("Laplacian of φ₀ and its gradient"));
            }
            let grad = |p| field.gradient(p).unwrap_or([f64::NAN; 2]);
            let phi0 = fem::ritz_projection(space, fem.stiffness(), fem.mean(), |p| field.value(p), grad)?;
            let mu = |p| {
                let v = field.value(p);
                (v * v * v - v) / eps - eps * field.laplacian(p).unwrap_or(f64::NAN)
            };
            let grad_mu = |p| {
                let v = field.value(p);
                let g = field.gradient(p).unwrap_or([f64::NAN; 2]);
                let gl = field.laplacian_gradient(p).unwrap_or([f64::NAN; 2]);
                let s = (3.0 * v * v - 1.0) / eps;
                [s * g[0] - eps * gl[0], s * g[1] - eps * gl[1]]
            };
            let mu0 = fem::ritz_projection(space, fem.stiffness(), fem.mean(), mu, grad_mu)?;
            Ok((phi0, mu0))
        }
    }
}

/// Result of a full run; `failure` is set when a solver error cut it short.
#[derive(Debug)]
pub struct RunOutcome {
    pub records: Vec<StepRecord>,
    pub state: SchemeState,
    pub failure: Option<Error>,
}

/// Initializes, then advances to `final_time`, calling `observer` with the
/// state after initialization (with no record) and after every step.
pub fn run<O>(
    fem: &FemHierarchy,
    params: &SchemeParams,
    field: &dyn InitialField,
    mode: InitMode,
    mut observer: O,
) -> Result<RunOutcome>
where
    O: FnMut(&SchemeState, Option<&StepRecord>),
{
    let steps = params.num_steps()?;
    let solver = CahnHilliardSolver::new(fem, params.clone())?;
    let mut state = solver.initialize(field, mode)?;
    observer(&state, None);
    let mut records = Vec::with_capacity(steps);
    for _ in 0..steps {
        match solver.advance(&mut state) {
            Ok(rec) => {
                observer(&state, Some(&rec));
                records.push(rec);
            }
            Err(e) => {
                return Ok(RunOutcome {
                    records,
                    state,
                    failure: Some(e),
                })
            }
        }
    }
    Ok(RunOutcome {
        records,
        state,
        failure: None,
    })
}
