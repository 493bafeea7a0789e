//! Propagation checked against independent references.

use open_majorana::dissipator::{davies_rhs, Generator};
use open_majorana::hamiltonian::{hamiltonian_at, ModelParams};
use open_majorana::integrator::{propagate, schrodinger_trajectory, DensityMatrix, SolverConfig};
use open_majorana::ode::{integrate, StepControl};
use open_majorana::spin_algebra::{bare_ket, max_abs, C64};
use open_majorana::{ComplexMat3, Level};

/// Final populations of the spin-½ problem `H = κt·σz/2 + Ω·σx/2` started
/// in the lower bare state, integrated on its own.
fn spin_half_transfer(p: &ModelParams) -> f64 {
    let f = |t: f64, y: &[f64; 4]| {
        // ψ = (a, b) with y = (Re a, Im a, Re b, Im b); dψ/dt = −iHψ
        let (d, o) = (-0.5 * p.kappa * t, 0.5 * p.omega_rabi);
        let (ar, ai, br, bi) = (y[0], y[1], y[2], y[3]);
        let (hr_a, hi_a) = (d * ar + o * br, d * ai + o * bi);
        let (hr_b, hi_b) = (o * ar - d * br, o * ai - d * bi);
        [hi_a, -hr_a, hi_b, -hr_b]
    };
    let ctl = StepControl { rtol: 1e-12, atol: 1e-14, dt_max: 0.01, dt_init: 1e-3 };
    let (y, _) = integrate(f, -p.t0, [1.0, 0.0, 0.0, 0.0], &[p.t0], &ctl, |_| Ok(())).unwrap();
    y[2] * y[2] + y[3] * y[3]
}

#[test]
fn closed_system_obeys_majorana_reduction() {
    // a spin-1 rotating in a field is two independent spin-½ copies, so the
    // populations are (q², 2pq, p²) with p the spin-½ transfer probability
    for kappa in [0.1, 0.25, 1.0, 3.0] {
        let p = ModelParams::default().with_kappa_fixed_kt0(kappa);
        let transfer = spin_half_transfer(&p);
        let stay = 1.0 - transfer;
        let tr = propagate(&DensityMatrix::pure(Level::Down), &p, &SolverConfig::default(), 2).unwrap();
        let pops = tr.rho_final.populations();
        let expect = [stay * stay, 2.0 * stay * transfer, transfer * transfer];
        for k in 0..3 {
            assert!((pops[k] - expect[k]).abs() < 1e-7, "κ = {kappa}: {pops:?} vs {expect:?}");
        }
    }
}

#[test]
fn master_equation_matches_schrodinger_without_bath() {
    let s = SolverConfig::default();
    for (kappa, initial, phi) in [(0.25, Level::Down, 0.0), (0.05, Level::Up, 1.0), (0.8, Level::Zero, 2.0)] {
        let p = ModelParams { phi, ..ModelParams::default().with_kappa_fixed_kt0(kappa) };
        let me = propagate(&DensityMatrix::pure(initial), &p, &s, 51).unwrap();
        let se = schrodinger_trajectory(&bare_ket(initial), &p, &s, 51).unwrap();
        assert_eq!(me.times, se.times);
        for (a, b) in me.populations.iter().zip(&se.populations) {
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-6, "κ = {kappa}: {a:?} vs {b:?}");
            }
        }
        assert!(se.max_norm_defect < 1e-9);
    }
}

fn pack(m: &ComplexMat3) -> [f64; 18] {
    let mut out = [0.0; 18];
    for (k, z) in m.iter().enumerate() {
        out[2 * k] = z.re;
        out[2 * k + 1] = z.im;
    }
    out
}

fn unpack(y: &[f64; 18]) -> ComplexMat3 {
    ComplexMat3::from_iterator((0..9).map(|k| C64::new(y[2 * k], y[2 * k + 1])))
}

#[test]
fn eigenframe_generator_matches_projector_generator_along_trajectory() {
    let p = ModelParams { lambda: 0.25, phi: 0.9, varphi: 0.4, kbt: 1.5, ..ModelParams::default().with_kappa_fixed_kt0(0.5) };
    let s = SolverConfig::default();
    let fast = propagate(&DensityMatrix::pure(Level::Down), &p, &s, 2).unwrap();

    let g = Generator::new(&p);
    let ctl = StepControl { rtol: s.rtol, atol: s.atol, dt_max: SolverConfig::step_bound(&p), dt_init: 1e-3 };
    let rho0 = DensityMatrix::pure(Level::Down).into_inner();
    let (y, _) = integrate(
        |t, y| pack(&davies_rhs(&hamiltonian_at(t, &p), &g.jumps(t), &unpack(y))),
        -p.t0,
        pack(&rho0),
        &[p.t0],
        &ctl,
        |_| Ok(()),
    )
    .unwrap();
    let slow = unpack(&y);
    assert!(max_abs(&(slow - fast.rho_final.mat())) < 1e-8);
}

#[test]
fn strong_hot_bath_drives_toward_equal_populations() {
    let p = ModelParams { lambda: 1.0, kbt: 1e4, phi: 1.0, varphi: 0.5, ..ModelParams::default() };
    let tr = propagate(&DensityMatrix::pure(Level::Down), &p, &SolverConfig::default(), 2).unwrap();
    for pop in tr.rho_final.populations() {
        assert!((pop - 1.0 / 3.0).abs() < 0.02, "{pop}");
    }
}

#[test]
fn cold_bath_relaxes_into_instantaneous_ground_state() {
    // starting in |1⟩_z puts the system in the adiabatic ground state; a cold
    // bath only pushes it further down
    let p = ModelParams { lambda: 0.5, phi: std::f64::consts::FRAC_PI_2, ..ModelParams::default() };
    let tr = propagate(&DensityMatrix::pure(Level::Up), &p, &SolverConfig::default(), 2).unwrap();
    assert!(tr.rho_final.population(Level::Down) > 0.999);
}
