//! Cross-checks between independent routes: grid solvers against the exact 1D
//! theory, and grid solvers against finer copies of themselves.

use effham::cell::CellConfig;
use effham::effective::{ball_in_d, build_table, effective_hamiltonian, EffectiveConfig, Lattice, Verdict};
use effham::homog::{solve_effective, solve_hje, EvolutionProblem, InitialDatum, Snapshots};
use effham::onedim::{critical_value_1d, solvability_interval, OneDimProblem};
use effham::scheme::GridSpec;
use effham::{Hamiltonian, KineticModel, SupplyField};

fn tri_tanh(dim: usize) -> Hamiltonian {
    Hamiltonian::new(SupplyField::triangular(1.5, 2.5, dim).unwrap(), KineticModel::tanh())
}

fn config(ham: &Hamiltonian, points: usize) -> EffectiveConfig {
    let tol = if ham.dim() == 1 { 1e-8 } else { 1e-6 };
    EffectiveConfig::new(ham, CellConfig::with_grid(GridSpec::new(ham.dim(), points).unwrap(), tol).unwrap())
}

#[test]
fn table_matches_exact_critical_values() {
    let ham = tri_tanh(1);
    let problem = OneDimProblem::from_hamiltonian(&ham).unwrap();
    let d = solvability_interval(&problem);
    let table = build_table(&ham, Lattice::new(1, 0.7, 0.1).unwrap(), &config(&ham, 256)).unwrap();
    for pt in &table.points {
        let p = pt.p[0];
        assert!(d.contains(p));
        let exact = critical_value_1d(&problem, p, 1e-10).unwrap();
        let rel = (pt.hbar_inf - exact).abs() / exact;
        assert!(rel <= 2e-2, "P = {p}: {} vs {exact}", pt.hbar_inf);
    }
}

#[test]
fn errors_shrink_with_the_grid() {
    let ham = tri_tanh(1);
    let problem = OneDimProblem::from_hamiltonian(&ham).unwrap();
    let exact = critical_value_1d(&problem, 0.5, 1e-10).unwrap();
    let err = |points| (effective_hamiltonian(&ham, &[0.5], &config(&ham, points)).unwrap().hbar_inf - exact).abs();
    let (coarse, mid, fine) = (err(64), err(128), err(256));
    assert!(coarse > mid && mid > fine, "{coarse} {mid} {fine}");
}

#[test]
fn guaranteed_ball_is_in_d_in_two_dimensions() {
    let ham = tri_tanh(2);
    let radius = ball_in_d(&ham);
    let table = build_table(&ham, Lattice::new(2, 0.2, 0.1).unwrap(), &config(&ham, 32)).unwrap();
    for pt in table.points.iter().filter(|pt| pt.p_norm() < radius) {
        assert_eq!(pt.verdict, Verdict::InD, "{:?}", pt.p);
    }
    let sandwich = table.check_sandwich(&ham);
    assert!(sandwich.passed, "{}", sandwich.detail);
}

#[test]
fn rational_profile_is_in_d_everywhere_in_one_dimension() {
    let ham = Hamiltonian::new(SupplyField::triangular(1.5, 2.5, 1).unwrap(), KineticModel::rational());
    let problem = OneDimProblem::from_hamiltonian(&ham).unwrap();
    assert_eq!(solvability_interval(&problem).describe(), "R");
    let cfg = config(&ham, 256);
    for p in [0.5, 1.0, 1.5] {
        let pt = effective_hamiltonian(&ham, &[p], &cfg).unwrap();
        let exact = critical_value_1d(&problem, p, 1e-10).unwrap();
        assert_eq!(pt.verdict, Verdict::InD, "P = {p}");
        assert!((pt.hbar_inf - exact).abs() / exact <= 2e-2, "P = {p}: {} vs {exact}", pt.hbar_inf);
    }
}

/// c(P) approaches σ_min exponentially for the rational profile, so at P = 2 the
/// grid bias exceeds the margin until the grid is fine enough.
#[test]
fn rational_profile_far_point_resolves_with_the_grid() {
    let ham = Hamiltonian::new(SupplyField::triangular(1.5, 2.5, 1).unwrap(), KineticModel::rational());
    let problem = OneDimProblem::from_hamiltonian(&ham).unwrap();
    let exact = critical_value_1d(&problem, 2.0, 1e-10).unwrap();
    let runs: Vec<_> =
        [128, 256, 512].into_iter().map(|g| effective_hamiltonian(&ham, &[2.0], &config(&ham, g)).unwrap()).collect();
    let errors: Vec<f64> = runs.iter().map(|pt| pt.hbar_inf - exact).collect();
    assert!(errors.windows(2).all(|w| 0.0 < w[1] && w[1] < w[0]), "{errors:?}");
    assert_eq!(runs[2].verdict, Verdict::InD);
    assert!(runs.iter().all(|pt| pt.verdict != Verdict::InD || pt.hbar_inf < ham.sigma.sigma_min()));
}

/// Constant supply: coarse runs against a 4096-point reference of the same scheme.
#[test]
fn constant_supply_self_convergence() {
    let ham = Hamiltonian::new(SupplyField::constant(2.0, 1).unwrap(), KineticModel::tanh());
    let problem = EvolutionProblem::new(InitialDatum::Cosine(0.05), 0.2, 1).unwrap();
    let solve = |points| solve_hje(&ham, &problem, GridSpec::new(1, points).unwrap(), 0.9, &Snapshots::Final).unwrap();
    let reference = solve(4096);
    let err = |points: usize| {
        let coarse = solve(points);
        let stride = 4096 / points;
        coarse
            .final_slice()
            .iter()
            .enumerate()
            .map(|(i, v)| (v - reference.final_slice()[i * stride]).abs())
            .fold(0.0, f64::max)
    };
    let errors: Vec<f64> = [128, 256, 512].into_iter().map(err).collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    assert!(errors[2] <= ham.p_lipschitz() / 512.0, "{errors:?}");
}

#[test]
fn effective_solution_is_insensitive_to_the_time_step() {
    let ham = tri_tanh(1);
    let cfg = config(&ham, 64);
    let table = build_table(&ham, Lattice::new(1, 0.3, 0.05).unwrap(), &cfg).unwrap();
    let grid = GridSpec::new(1, 256).unwrap();
    let u0 = InitialDatum::Sine(0.03);
    let a = solve_effective(&u0, 0.5, &table, grid, 0.9, &Snapshots::Final).unwrap();
    let b = solve_effective(&u0, 0.5, &table, grid, 0.45, &Snapshots::Final).unwrap();
    let diff = a.final_slice().iter().zip(b.final_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(diff <= 2.0 * cfg.scheme_tol, "{diff}");
}
