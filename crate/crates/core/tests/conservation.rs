//! Physical validity and numerical convergence of propagated states.

use std::f64::consts::{FRAC_PI_2, PI};

use open_majorana::integrator::{propagate, DensityMatrix, DensityTolerances, SolverConfig};
use open_majorana::spin_algebra::hermitian_eigenvalues;
use open_majorana::{Level, ModelParams};

fn cases() -> Vec<(ModelParams, Level)> {
    let base = ModelParams::default();
    vec![
        (base, Level::Down),
        (ModelParams { lambda: 0.3, ..base }, Level::Down),
        (ModelParams { lambda: 0.3, phi: FRAC_PI_2, ..base }, Level::Down),
        (ModelParams { lambda: 0.5, phi: FRAC_PI_2, kbt: 10.0, ..base }, Level::Down),
        (ModelParams { lambda: 0.5, phi: FRAC_PI_2, kbt: 250.0, ..base }, Level::Up),
        (ModelParams { lambda: 0.2, phi: PI / 3.0, varphi: 1.0, kbt: 3.0, ..base }, Level::Zero),
        (ModelParams { lambda: 0.0, ..base.with_kappa_fixed_kt0(1.5) }, Level::Down),
        (ModelParams { lambda: 0.01, ..base.with_kappa_fixed_kt0(2.0) }, Level::Down),
    ]
}

#[test]
fn trace_hermiticity_and_positivity_hold() {
    let tol = DensityTolerances::default();
    for (p, initial) in cases() {
        let tr = propagate(&DensityMatrix::pure(initial), &p, &SolverConfig::default(), 201).unwrap();
        let c = tr.conservation;
        assert!(c.within(&tol), "{p:?}: {c:?}");
        let ev = hermitian_eigenvalues(tr.rho_final.mat());
        assert!(ev[0] >= -1e-8, "{p:?}: {ev:?}");
        for pops in &tr.populations {
            let sum: f64 = pops.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-9);
        }
    }
}

#[test]
fn unhermitized_integration_stays_valid() {
    let s = SolverConfig { hermitize_each_step: false, ..Default::default() };
    let p = ModelParams { lambda: 0.3, phi: 1.0, varphi: 2.0, kbt: 1.0, ..Default::default() };
    let tr = propagate(&DensityMatrix::pure(Level::Down), &p, &s, 11).unwrap();
    assert!(tr.conservation.within(&DensityTolerances::default()), "{:?}", tr.conservation);
}

#[test]
fn halving_tolerances_changes_little() {
    let s = SolverConfig::default();
    for (p, initial) in cases().into_iter().step_by(2) {
        let target = if initial == Level::Up { Level::Down } else { Level::Up };
        let a = propagate(&DensityMatrix::pure(initial), &p, &s, 2).unwrap();
        let b = propagate(&DensityMatrix::pure(initial), &p, &s.with_tolerances_scaled(0.5), 2).unwrap();
        let diff = (a.rho_final.population(target) - b.rho_final.population(target)).abs();
        assert!(diff < 10.0 * s.rtol.max(s.atol), "{p:?}: {diff:e}");
    }
}

#[test]
fn steps_respect_bound() {
    let p = ModelParams::default();
    let s = SolverConfig { dt_max: Some(1.0), ..Default::default() };
    assert_eq!(s.effective_dt_max(&p), SolverConfig::step_bound(&p));
    assert!(SolverConfig::step_bound(&p) <= 0.002);
    let tr = propagate(&DensityMatrix::pure(Level::Down), &p, &s, 2).unwrap();
    let min_steps = (2.0 * p.t0 / SolverConfig::step_bound(&p)).floor() as u64;
    assert!(tr.stats.accepted >= min_steps);
}
