use cahn_hilliard::fem::{self, FemHierarchy};
use cahn_hilliard::linalg::{dot, norm2, norm_inf};
use cahn_hilliard::presets::{InitialField, Preset};
use cahn_hilliard::scheme::*;
use cahn_hilliard::Error;
use nalgebra::{DMatrix, DVector};

const TAU: f64 = 0.002 / 64.0;

fn params(eps: f64, tau: f64, steps: usize) -> SchemeParams {
    SchemeParams::new(eps, tau, tau * steps as f64).unwrap()
}

#[test]
fn params_validation() {
    assert!(SchemeParams::new(0.0, 0.1, 1.0).is_err());
    assert!(SchemeParams::new(1.5, 0.1, 1.0).is_err());
    assert!(SchemeParams::new(0.1, 0.0, 1.0).is_err());
    assert!(SchemeParams::new(1.0, 1.0, 1.0).is_ok());
    assert_eq!(params(0.05, TAU, 7).num_steps().unwrap(), 7);
    let odd = SchemeParams::new(0.05, 0.1, 0.25).unwrap();
    assert!(odd.num_steps().is_err());
}

#[test]
fn run_rejects_partial_final_step() {
    let fem = FemHierarchy::with_finest_level(1).unwrap();
    let p = SchemeParams::new(0.1, 0.1, 0.25).unwrap();
    let field = Preset::Cosine.field(0.1);
    assert!(run(&fem, &p, &field, InitMode::Interpolate, |_, _| {}).is_err());
}

#[test]
fn initialization_of_trivial_fields() {
    let fem = FemHierarchy::with_finest_level(2).unwrap();
    for mode in [InitMode::Interpolate, InitMode::Ritz] {
        let (phi, mu) = initialize_fields(&fem, &Preset::Constant(0.0).field(0.1), 0.1, mode).unwrap();
        assert!(norm_inf(&phi) < 1e-14 && norm_inf(&mu) < 1e-12);
        let (phi, mu) = initialize_fields(&fem, &Preset::Constant(1.0).field(0.1), 0.1, mode).unwrap();
        assert!(phi.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(norm_inf(&mu) < 1e-10, "{mode:?}: {}", norm_inf(&mu));
    }
}

#[test]
fn ritz_mode_needs_derivatives() {
    let fem = FemHierarchy::with_finest_level(2).unwrap();
    for preset in [Preset::Oval, Preset::Cross] {
        let err = initialize_fields(&fem, &preset.field(0.03), 0.03, InitMode::Ritz).unwrap_err();
        assert!(matches!(err, Error::MissingDerivatives(_)));
    }
    assert!(initialize_fields(&fem, &Preset::Cosine.field(0.05), 0.05, InitMode::Ritz).is_ok());
}

#[test]
fn ritz_initial_chemical_potential_converges() {
    // μ₀ for the cosine data, compared with its Ritz projection on two meshes.
    let eps = 0.5;
    let field = Preset::Cosine.field(eps);
    let mu_exact = |p| {
        let v = field.value(p);
        (v * v * v - v) / eps - eps * field.laplacian(p).unwrap()
    };
    let mut errs = Vec::new();
    for level in [3, 4] {
        let fem = FemHierarchy::with_finest_level(level).unwrap();
        let (_, mu0) = initialize_fields(&fem, &field, eps, InitMode::Ritz).unwrap();
        let space = fem.space();
        let e = space.integrate_fe(&[&mu0], |_| 0.0);
        assert_eq!(e, 0.0);
        let diff = space.interpolate(mu_exact);
        let d: Vec<f64> = diff.iter().zip(&mu0).map(|(a, b)| a - b).collect();
        errs.push(fem::l2_norm_sq(space, &d).sqrt() / fem::l2_norm_sq(space, &diff).sqrt());
    }
    assert!(errs[1] < errs[0] / 4.0, "{errs:?}");
}

#[test]
fn cosine_mass_two_ways() {
    let fem = FemHierarchy::with_finest_level(4).unwrap();
    let field = Preset::Cosine.field(0.05);
    let (phi, _) = initialize_fields(&fem, &field, 0.05, InitMode::Interpolate).unwrap();
    let by_c = dot(fem.mean(), &phi);
    let by_quad = fem.space().integrate_fe(&[&phi], |v| v[0]);
    assert!((by_c - by_quad).abs() < 1e-12);
    assert!((by_c + 0.5).abs() < 1e-3);
}

#[test]
fn recover_mean_examples() {
    let fem = FemHierarchy::with_finest_level(2).unwrap();
    let n = fem.space().n_dof();
    let zero = vec![0.0; n];
    let eps = 0.3;
    let ones = vec![1.0; n];
    assert!(recover_mu_mean(fem.space(), &zero, &ones, 1.0, eps).abs() < 1e-13);
    let twos = vec![2.0; n];
    let m = recover_mu_mean(fem.space(), &zero, &twos, 2.0, eps);
    assert!((m - 6.0 / eps).abs() < 1e-12);
}

#[test]
fn equilibrium_is_stationary() {
    let fem = FemHierarchy::with_finest_level(3).unwrap();
    let p = params(0.1, 0.01, 3);
    let out = run(&fem, &p, &Preset::Constant(1.0).field(0.1), InitMode::Interpolate, |_, _| {}).unwrap();
    assert!(out.failure.is_none());
    assert_eq!(out.records.len(), 3);
    for r in &out.records {
        assert!(r.newton_iterations <= 1);
        assert!(r.energy.abs() < 1e-20);
        assert!((r.mass - 1.0).abs() < 1e-12);
    }
    assert!(out.state.phi_curr.iter().all(|v| (v - 1.0).abs() < 1e-12));
    assert!(norm_inf(&out.state.mu_half_prev) < 1e-10);
}

struct Setup {
    fem: FemHierarchy,
    solver_params: SchemeParams,
}

fn setup(level: usize, eps: f64, tau: f64) -> Setup {
    Setup {
        fem: FemHierarchy::with_finest_level(level).unwrap(),
        solver_params: params(eps, tau, 1),
    }
}

#[test]
fn first_step_properties() {
    let s = setup(4, 0.05, TAU);
    let solver = CahnHilliardSolver::new(&s.fem, s.solver_params.clone()).unwrap();
    let state = solver.initialize(&Preset::Cosine.field(0.05), InitMode::Interpolate).unwrap();
    let out = solver.first_step(&state).unwrap();
    assert!(out.newton.iterations <= 2);
    let ineq = first_step_energy_inequality(
        &s.fem,
        &state.phi_curr,
        &state.mu_half_prev,
        &out.phi_next,
        &out.mu_half,
        0.05,
        TAU,
    )
    .unwrap();
    assert!(ineq.holds(), "{ineq:?}");
    let c = s.fem.mean();
    assert!((dot(c, &out.phi_next) - dot(c, &state.phi_curr)).abs() < 1e-11);
    assert!(solver.time_step(&state).is_err());
}

#[test]
fn chemical_potential_mean_consistency() {
    // Full second equation tested with ψ = 1:
    // (μ, 1) = ε⁻¹(χ(φ¹, φ⁰), 1) - ε⁻¹(φ⁰, 1) for the start step.
    let eps = 0.05;
    let s = setup(4, eps, TAU);
    let solver = CahnHilliardSolver::new(&s.fem, s.solver_params.clone()).unwrap();
    let state = solver.initialize(&Preset::Cosine.field(eps), InitMode::Interpolate).unwrap();
    let out = solver.first_step(&state).unwrap();
    let space = s.fem.space();
    let chi_int = space.integrate_fe(&[&out.phi_next, &state.phi_curr], |v| chi(v[0], v[1]));
    let lhs = dot(s.fem.mean(), &out.mu_half);
    let rhs = (chi_int - dot(s.fem.mean(), &state.phi_curr)) / eps;
    assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
}

#[test]
fn mean_zero_invariants_along_run() {
    let fem = FemHierarchy::with_finest_level(3).unwrap();
    let p = params(0.05, TAU, 8);
    let mut checked = 0;
    let c = fem.mean().to_vec();
    let mut mass0 = None;
    let out = run(&fem, &p, &Preset::Cosine.field(0.05), InitMode::Interpolate, |st, _| {
        let m = dot(&c, &st.phi_curr);
        let m0 = *mass0.get_or_insert(m);
        assert!((m - m0).abs() < 1e-11);
        if let Some(prev) = &st.phi_prev {
            assert!((dot(&c, &st.phi_curr) - dot(&c, prev)).abs() < 1e-11);
        }
        checked += 1;
    })
    .unwrap();
    assert!(out.failure.is_none());
    assert_eq!(checked, 9);
}

#[test]
fn telescoped_energy_law_short_run() {
    let fem = FemHierarchy::with_finest_level(3).unwrap();
    let p = params(0.05, TAU, 20);
    let out = run(&fem, &p, &Preset::Cosine.field(0.05), InitMode::Interpolate, |_, _| {}).unwrap();
    let res = energy_law_residuals(&out.records);
    assert_eq!(res.len(), 19);
    assert!(res.iter().all(|&r| r <= 1e-8), "{res:?}");
    for w in out.records.windows(2) {
        assert!(w[1].modified_energy <= w[0].modified_energy);
    }
}

#[test]
fn newton_converges_quadratically_from_poor_guess() {
    let eps = 0.05;
    let fem = FemHierarchy::with_finest_level(3).unwrap();
    let mut p = params(eps, TAU, 1);
    p.minres_tol = 1e-12;
    p.newton_residual_tol = 1e-30;
    p.newton_linf_tol = 1e-13;
    let solver = CahnHilliardSolver::new(&fem, p).unwrap();
    let mut state = solver.initialize(&Preset::Cosine.field(eps), InitMode::Interpolate).unwrap();
    solver.advance(&mut state).unwrap();
    solver.advance(&mut state).unwrap();
    let prev = state.phi_prev.clone().unwrap();
    let guess = solver.mean_zero_part(&prev);
    let mu_guess = solver.mean_zero_part(&state.mu_half_prev);
    let kind = StepKind::Regular { phi_prev: &prev };
    let (_, _, report) = solver
        .newton_solve(kind, &state.phi_curr, state.mean_phi0, guess, mu_guess)
        .unwrap();
    let inc = &report.increments;
    assert!(inc.len() >= 3, "{inc:?}");
    for w in inc.windows(2) {
        if w[1] > 1e-13 {
            assert!(w[1] <= 1e-3 * w[0], "{inc:?}");
        }
    }
}

#[test]
fn zero_residual_means_zero_iterations() {
    let fem = FemHierarchy::with_finest_level(2).unwrap();
    let solver = CahnHilliardSolver::new(&fem, params(0.1, 0.01, 1)).unwrap();
    let state = solver.initialize(&Preset::Constant(1.0).field(0.1), InitMode::Interpolate).unwrap();
    let n = fem.space().n_dof();
    let kind = StepKind::First {
        mu0: &state.mu_half_prev,
    };
    let (phi, mu, report) = solver
        .newton_solve(kind, &state.phi_curr, state.mean_phi0, vec![0.0; n], vec![0.0; n])
        .unwrap();
    assert_eq!(report.iterations, 0);
    assert!(norm_inf(&phi) == 0.0 && norm_inf(&mu) == 0.0);
}

#[test]
fn scaled_solve_matches_dense_unscaled_solve() {
    let eps = 0.05;
    let fem = FemHierarchy::with_finest_level(3).unwrap();
    let mut p = params(eps, TAU, 1);
    p.minres_tol = 1e-12;
    let solver = CahnHilliardSolver::new(&fem, p.clone()).unwrap();
    let mut state = solver.initialize(&Preset::Cosine.field(eps), InitMode::Interpolate).unwrap();
    solver.advance(&mut state).unwrap();
    let prev = state.phi_prev.clone().unwrap();
    let kind = StepKind::Regular { phi_prev: &prev };
    let phi_ring = solver.mean_zero_part(&state.phi_curr);
    let mu_ring = solver.mean_zero_part(&state.mu_half_prev);
    let system = solver
        .newton_system(kind, &state.phi_curr, state.mean_phi0, &phi_ring, &mu_ring)
        .unwrap();
    let dir = system.solve(&fem, &p, solver.preconditioner(), 1e-12).unwrap();

    // The unconstrained system assembled densely from its definition, with the
    // χ-derivative form acting on mean-zero parts.
    let n = system.n();
    let c = DVector::from_column_slice(fem.mean());
    let k_aug = fem.stiffness().to_dense() + &c * c.transpose();
    let m = fem.mass().to_dense();
    let proj = DMatrix::identity(n, n) - DVector::from_element(n, 1.0) * c.transpose();
    let j = proj.transpose() * system.jacobian.to_dense() * &proj;
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    a.view_mut((0, 0), (n, n)).copy_from(&(&k_aug * (TAU * eps)));
    a.view_mut((0, n), (n, n)).copy_from(&m);
    a.view_mut((n, 0), (n, n)).copy_from(&m);
    a.view_mut((n, n), (n, n)).copy_from(&(-(j / (4.0 * eps) + &k_aug * (0.75 * eps))));
    assert!((&a - system.unscaled_dense(&fem, &p)).amax() < 1e-12 * a.amax());
    let rhs: Vec<f64> = system.f.iter().chain(&system.g).copied().collect();
    let x = a.lu().solve(&DVector::from_vec(rhs.clone())).unwrap();
    let (dmu, dphi) = (&x.as_slice()[..n], &x.as_slice()[n..]);
    let mine: Vec<f64> = dir.dmu.iter().chain(&dir.dphi).copied().collect();
    let diff: Vec<f64> = mine.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
    assert!(norm2(&diff) <= 1e-8 * norm2(x.as_slice()), "{}", norm2(&diff) / norm2(x.as_slice()));

    let c = fem.mean();
    let bound = 1e-9 * norm2(&rhs);
    for v in [dmu, dphi, &dir.dmu[..], &dir.dphi[..]] {
        assert!(dot(c, v).abs() <= bound, "{} > {bound}", dot(c, v).abs());
    }
}
