//! Davies generator for the chirped spin-1 system.
//!
//! Jump operators are the components of the coupling operator `X` that
//! connect instantaneous eigenspaces of `H(t)` at Bohr frequencies
//! `ν = ±ω(t), ±2ω(t)`. Positive `ν` lowers the energy by `ν` and is weighted
//! by `λ²(N(ν) + 1)`; negative `ν` raises it and is weighted by `λ²N(|ν|)`.
//! Same-eigenspace (`ν = 0`) terms are not part of the generator.

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::hamiltonian::{hamiltonian_at, omega_of_t, theta_of_t, ModelParams};
use crate::spin_algebra::{adiabatic_frame, anticommutator, projector_of, spin1_operators, ComplexMat3, Level};
use crate::{Error, Result};

type C64 = Complex64;

/// From this ratio `ν/k_BT` upward the Bose occupation is returned as exactly 0.
const OCCUPATION_CUTOFF: f64 = 700.0;
/// Below this ratio the occupation uses `k_BT/ν − 1/2`.
const OCCUPATION_SERIES: f64 = 1e-8;

/// `X = cosφ·Jz + sinφ·cosϕ·Jx + sinφ·sinϕ·Jy`.
pub fn coupling_operator(phi: f64, varphi: f64) -> ComplexMat3 {
    let (jx, jy, jz) = spin1_operators();
    let (sp, cp) = phi.sin_cos();
    let (sv, cv) = varphi.sin_cos();
    jz * C64::from(cp) + jx * C64::from(sp * cv) + jy * C64::from(sp * sv)
}

fn occupation_unchecked(nu: f64, kbt: f64) -> f64 {
    let x = nu / kbt;
    if x >= OCCUPATION_CUTOFF {
        0.0
    } else if x < OCCUPATION_SERIES {
        1.0 / x - 0.5
    } else {
        1.0 / x.exp_m1()
    }
}

/// Mean thermal boson number `N(ν, T) = 1/(exp(ν/k_BT) − 1)` for `ν > 0`.
pub fn bose_occupation(nu: f64, kbt: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("occupation needs a positive frequency, got {nu}")));
    }
    if !(kbt > 0.0) {
        return Err(Error::Domain(format!("temperature must be positive, got {kbt}")));
    }
    Ok(occupation_unchecked(nu, kbt))
}

fn rate_unchecked(nu: f64, lambda: f64, kbt: f64) -> f64 {
    let l2 = lambda * lambda;
    if nu > 0.0 {
        l2 * (occupation_unchecked(nu, kbt) + 1.0)
    } else {
        l2 * occupation_unchecked(-nu, kbt)
    }
}

/// Flat-spectrum KMS rate `γ(ν)`.
pub fn rate(nu: f64, lambda: f64, kbt: f64) -> Result<f64> {
    if nu == 0.0 || !nu.is_finite() {
        return Err(Error::Domain(format!("rate is defined for non-zero finite ν, got {nu}")));
    }
    bose_occupation(nu.abs(), kbt)?;
    Ok(rate_unchecked(nu, lambda, kbt))
}

#[derive(Clone, Debug)]
pub struct Jump {
    /// Bohr frequency ν.
    pub nu: f64,
    pub op: ComplexMat3,
    pub rate: f64,
}

/// The four secular jump operators at one instant, ordered `+2ω, +ω, −ω, −2ω`.
#[derive(Clone, Debug)]
pub struct JumpSet {
    pub t: f64,
    pub entries: [Jump; 4],
}

impl JumpSet {
    pub fn iter(&self) -> impl Iterator<Item = &Jump> {
        self.entries.iter()
    }
}

/// Pairs `(from, to)` of adiabatic levels for each jump, as `(row, col)` of
/// `P_row·X·P_col`, in the order `+2ω, +ω, −ω, −2ω`.
const JUMP_PAIRS: [&[(Level, Level)]; 4] = [
    &[(Level::Down, Level::Up)],
    &[(Level::Down, Level::Zero), (Level::Zero, Level::Up)],
    &[(Level::Zero, Level::Down), (Level::Up, Level::Zero)],
    &[(Level::Up, Level::Down)],
];

const JUMP_ORDERS: [f64; 4] = [2.0, 1.0, -1.0, -2.0];

/// Right-hand side of the master equation for one parameter set.
///
/// The coupling operator is built once; everything time dependent is
/// recomputed from the closed-form eigenbasis on each call.
#[derive(Clone, Debug)]
pub struct Generator {
    params: ModelParams,
    coupling: ComplexMat3,
    coupling_parts: Parts,
}

impl Generator {
    pub fn new(params: &ModelParams) -> Self {
        let coupling = coupling_operator(params.phi, params.varphi);
        Generator {
            params: *params,
            coupling,
            coupling_parts: split(&coupling),
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn coupling(&self) -> &ComplexMat3 {
        &self.coupling
    }

    /// Jump operators assembled from eigenprojectors in the z basis.
    pub fn jumps(&self, t: f64) -> JumpSet {
        let p = &self.params;
        let theta = theta_of_t(t, p);
        let omega = omega_of_t(t, p);
        let proj = Level::ALL.map(|l| projector_of(l, theta));
        let entries = std::array::from_fn(|k| {
            let op = JUMP_PAIRS[k].iter().fold(ComplexMat3::zeros(), |acc, &(a, b)| {
                acc + proj[a.index()] * self.coupling * proj[b.index()]
            });
            let nu = JUMP_ORDERS[k] * omega;
            Jump {
                nu,
                op,
                rate: rate_unchecked(nu, p.lambda, p.kbt),
            }
        });
        JumpSet { t, entries }
    }

    /// `−i[H(t), ρ] + Σ_ν γ(ν)(X(ν)ρX(ν)† − ½{X(ν)†X(ν), ρ})`.
    ///
    /// Evaluated in the adiabatic frame `U = (|-1⟩_θ, |0⟩_θ, |1⟩_θ)`, where
    /// `H` is `diag(-ω, 0, ω)`, each jump operator has at most two non-zero
    /// entries and every `X(ν)†X(ν)` is diagonal. `U` is real, so the frame
    /// change acts on real and imaginary parts separately.
    pub fn rhs(&self, t: f64, rho: &ComplexMat3) -> ComplexMat3 {
        let p = &self.params;
        if p.lambda == 0.0 {
            let h = hamiltonian_at(t, p);
            return (h * rho - rho * h) * C64::new(0.0, -1.0);
        }

        let omega = omega_of_t(t, p);
        let u = adiabatic_frame(theta_of_t(t, p));
        let ut = u.transpose();
        let x = to_frame(&ut, &u, &self.coupling_parts);
        let r = to_frame(&ut, &u, &split(rho));

        let energy = [-omega, 0.0, omega];
        let mut acc = [[C64::new(0.0, 0.0); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                // −i(E_i − E_j)ρ_ij
                let z = C64::new(r.0[(i, j)], r.1[(i, j)]);
                acc[i][j] = z * C64::new(0.0, energy[j] - energy[i]);
            }
        }
        let mut decay = [0.0f64; 3];
        for (pairs, order) in JUMP_PAIRS.iter().zip(JUMP_ORDERS) {
            let gamma = rate_unchecked(order * omega, p.lambda, p.kbt);
            if gamma == 0.0 {
                continue;
            }
            for &(i, k) in pairs.iter() {
                let (i, k) = (i.index(), k.index());
                let a = C64::new(x.0[(i, k)], x.1[(i, k)]) * gamma;
                decay[k] += gamma * (x.0[(i, k)].powi(2) + x.1[(i, k)].powi(2));
                for &(j, l) in pairs.iter() {
                    let (j, l) = (j.index(), l.index());
                    let b = C64::new(x.0[(j, l)], -x.1[(j, l)]);
                    acc[i][j] += a * b * C64::new(r.0[(k, l)], r.1[(k, l)]);
                }
            }
        }
        let mut re = Matrix3::<f64>::zeros();
        let mut im = Matrix3::<f64>::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let g = 0.5 * (decay[i] + decay[j]);
                re[(i, j)] = acc[i][j].re - g * r.0[(i, j)];
                im[(i, j)] = acc[i][j].im - g * r.1[(i, j)];
            }
        }
        let (re, im) = to_frame(&u, &ut, &(re, im));
        ComplexMat3::from_fn(|i, j| C64::new(re[(i, j)], im[(i, j)]))
    }
}

type Parts = (Matrix3<f64>, Matrix3<f64>);

fn split(m: &ComplexMat3) -> Parts {
    (m.map(|z| z.re), m.map(|z| z.im))
}

/// `left · (re + i·im) · right` for real `left` and `right`.
#[inline]
fn to_frame(left: &Matrix3<f64>, right: &Matrix3<f64>, m: &Parts) -> Parts {
    (left * m.0 * right, left * m.1 * right)
}

/// Instantaneous jump operators `X(ν)` with their rates.
pub fn jump_operators(t: f64, p: &ModelParams) -> JumpSet {
    Generator::new(p).jumps(t)
}

/// Lindblad form evaluated term by term from an explicit Hamiltonian and jump set.
pub fn davies_rhs(h: &ComplexMat3, jumps: &JumpSet, rho: &ComplexMat3) -> ComplexMat3 {
    let mut out = (h * rho - rho * h) * C64::new(0.0, -1.0);
    for jump in jumps.iter() {
        let l = &jump.op;
        let ld = l.adjoint();
        let term = l * rho * ld - anticommutator(&(ld * l), rho) * C64::from(0.5);
        out += term * C64::from(jump.rate);
    }
    out
}

/// Master-equation right-hand side at time `t`.
pub fn lindblad_rhs(rho: &ComplexMat3, t: f64, p: &ModelParams) -> ComplexMat3 {
    Generator::new(p).rhs(t, rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_algebra::{adiabatic_ket, commutator, hermiticity_defect, max_abs};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{E, FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI, TAU};

    #[test]
    fn coupling_special_cases() {
        let (jx, jy, jz) = spin1_operators();
        assert!(max_abs(&(coupling_operator(0.0, 0.0) - jz)) < 1e-16);
        assert!(max_abs(&(coupling_operator(FRAC_PI_2, 0.0) - jx)) < 1e-16);
        assert!(max_abs(&(coupling_operator(FRAC_PI_2, FRAC_PI_2) - jy)) < 1e-16);
        let x = coupling_operator(1.1, 4.0);
        assert_eq!(hermiticity_defect(&x), 0.0);
    }

    #[test]
    fn occupation_values() {
        assert_eq!(bose_occupation(700.5, 1.0).unwrap(), 0.0);
        assert_eq!(bose_occupation(7000.0, 10.0).unwrap(), 0.0);
        assert!((bose_occupation(1.0, 1.0).unwrap() - 1.0 / (E - 1.0)).abs() < 1e-15);
        assert!((bose_occupation(1.0, 1.0).unwrap() - 0.58198).abs() < 1e-5);
        // 1/x − 1/2 + x/12 at x = 1e-3
        let series = 1000.0 - 0.5 + 1e-3 / 12.0;
        assert!((bose_occupation(1.0, 1000.0).unwrap() - series).abs() < 1e-9);
        assert!((bose_occupation(1e-10, 1.0).unwrap() - (1e10 - 0.5)).abs() < 1e-3);
        assert!(bose_occupation(0.0, 1.0).is_err());
        assert!(bose_occupation(-2.0, 1.0).is_err());
    }

    #[test]
    fn rates() {
        assert_eq!(rate(1.0, 0.3, 1e-300).unwrap(), 0.09);
        assert_eq!(rate(-1.0, 0.3, 1e-300).unwrap(), 0.0);
        let n = 1.0 / (E - 1.0);
        assert!((rate(1.0, 0.1, 1.0).unwrap() - 0.01 * (n + 1.0)).abs() < 1e-16);
        assert!((rate(-1.0, 0.1, 1.0).unwrap() - 0.01 * n).abs() < 1e-16);
        assert!((rate(1.0, 0.1, 1.0).unwrap() - 0.0158198).abs() < 1e-7);
        assert!(matches!(rate(0.0, 0.1, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn jz_matrix_elements_at_crossing() {
        let (_, _, jz) = spin1_operators();
        let th = FRAC_PI_2;
        let zero = adiabatic_ket(Level::Zero, th);
        let up = adiabatic_ket(Level::Up, th);
        let down = adiabatic_ket(Level::Down, th);
        assert!((zero.dotc(&(jz * up)) - C64::from(-FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!(down.dotc(&(jz * up)).norm() < 1e-15);

        let p = ModelParams::default();
        let jumps = jump_operators(0.0, &p);
        assert!(max_abs(&jumps.entries[0].op) < 1e-15);
        assert!(max_abs(&jumps.entries[1].op) > 0.1);
    }

    #[test]
    fn jz_jumps_vanish_asymptotically() {
        let p = ModelParams::default();
        let jumps = jump_operators(1e9, &p);
        for j in jumps.iter() {
            assert!(max_abs(&j.op) < 1e-8);
        }
    }

    #[test]
    fn completeness_decomposition() {
        let p = ModelParams { phi: 0.9, varphi: 2.2, ..Default::default() };
        for t in [-40.0, -1.3, 0.0, 2.5, 77.0] {
            let theta = theta_of_t(t, &p);
            let x = coupling_operator(p.phi, p.varphi);
            let diag = Level::ALL.iter().fold(ComplexMat3::zeros(), |acc, &l| {
                acc + projector_of(l, theta) * x * projector_of(l, theta)
            });
            let sum = jump_operators(t, &p).iter().fold(diag, |acc, j| acc + j.op);
            assert!(max_abs(&(sum - x)) < 1e-14);
        }
    }

    #[test]
    fn eigenoperators_and_adjoint_pairs() {
        let p = ModelParams { phi: 0.7, varphi: 1.9, kbt: 0.8, lambda: 0.2, ..Default::default() };
        for t in [-90.0, -3.0, 0.0, 0.4, 12.0] {
            let h = hamiltonian_at(t, &p);
            let js = jump_operators(t, &p);
            for j in js.iter() {
                let defect = max_abs(&(commutator(&h, &j.op) + j.op * C64::from(j.nu)));
                assert!(defect < 1e-10, "ν = {}", j.nu);
            }
            assert!(max_abs(&(js.entries[3].op - js.entries[0].op.adjoint())) < 1e-12);
            assert!(max_abs(&(js.entries[2].op - js.entries[1].op.adjoint())) < 1e-12);
        }
    }

    #[test]
    fn closed_system_limit() {
        let p = ModelParams { lambda: 0.0, phi: FRAC_PI_4, ..Default::default() };
        let rho = ComplexMat3::from_fn(|i, j| C64::new((i + j) as f64, i as f64 - j as f64));
        let h = hamiltonian_at(1.7, &p);
        let expect = commutator(&h, &rho) * C64::new(0.0, -1.0);
        assert_eq!(lindblad_rhs(&rho, 1.7, &p), expect);
    }

    #[test]
    fn eigenframe_route_matches_projector_route() {
        let p = ModelParams { lambda: 0.3, phi: 1.2, varphi: 0.6, kbt: 2.0, ..Default::default() };
        let g = Generator::new(&p);
        let rho = ComplexMat3::from_fn(|i, j| {
            let re = 0.1 * (i + 2 * j) as f64 + if i == j { 0.2 } else { 0.0 };
            C64::new(re, 0.05 * (i as f64 - j as f64))
        });
        let rho = (rho + rho.adjoint()) * C64::from(0.5);
        for t in [-60.0, -2.2, 0.0, 1.1, 33.0] {
            let fast = g.rhs(t, &rho);
            let slow = davies_rhs(&hamiltonian_at(t, &p), &g.jumps(t), &rho);
            assert!(max_abs(&(fast - slow)) < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn rhs_is_traceless_and_hermitian() {
        let p = ModelParams { lambda: 0.4, phi: PI / 3.0, varphi: 1.0, kbt: 3.0, ..Default::default() };
        let rho = ComplexMat3::from_fn(|i, j| {
            if i == j {
                C64::from([0.5, 0.3, 0.2][i])
            } else if i < j {
                C64::new(0.1, 0.07)
            } else {
                C64::new(0.1, -0.07)
            }
        });
        let d = lindblad_rhs(&rho, 5.0, &p);
        assert!(d.trace().norm() < 1e-14);
        assert!(hermiticity_defect(&d) < 1e-14);
    }

    fn random_params(rng: &mut ChaCha8Rng) -> (f64, ModelParams) {
        let p = ModelParams {
            lambda: rng.random_range(0.05..1.0),
            phi: rng.random_range(0.0..PI),
            varphi: rng.random_range(0.0..TAU),
            kbt: rng.random_range(0.05..10.0),
            ..Default::default()
        };
        (rng.random_range(-50.0..50.0), p)
    }

    /// `exp(a)` by scaling and squaring of a truncated Taylor series.
    fn expm(a: &ComplexMat3) -> ComplexMat3 {
        let norm = a.iter().map(|z| z.norm()).sum::<f64>();
        let squarings = norm.log2().ceil().max(0.0) as i32 + 1;
        let scaled = a / C64::from(2f64.powi(squarings));
        let mut term = ComplexMat3::identity();
        let mut sum = ComplexMat3::identity();
        for k in 1..25 {
            term = term * scaled / C64::from(k as f64);
            sum += term;
        }
        for _ in 0..squarings {
            sum = sum * sum;
        }
        sum
    }

    #[test]
    fn random_draws_satisfy_eigenoperator_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..64 {
            let (t, p) = random_params(&mut rng);
            let h = hamiltonian_at(t, &p);
            for j in jump_operators(t, &p).iter() {
                let defect = max_abs(&(commutator(&h, &j.op) + j.op * C64::from(j.nu)));
                assert!(defect < 1e-10, "t = {t}, {p:?}");
            }
        }
    }

    #[test]
    fn random_draws_satisfy_detailed_balance() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..64 {
            let (t, p) = random_params(&mut rng);
            let js = jump_operators(t, &p);
            for (up, down) in [(0, 3), (1, 2)] {
                let (a, b) = (&js.entries[up], &js.entries[down]);
                assert_eq!(a.nu, -b.nu);
                let expect = (-a.nu / p.kbt).exp() * a.rate;
                assert!((b.rate - expect).abs() <= 1e-12 * a.rate.max(1.0), "t = {t}, {p:?}");
            }
        }
    }

    #[test]
    fn frozen_time_gibbs_state_is_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..64 {
            let (t, p) = random_params(&mut rng);
            let h = hamiltonian_at(t, &p);
            // shifting by ω keeps the exponent non-positive
            let shifted = (h + ComplexMat3::identity() * C64::from(omega_of_t(t, &p))) / C64::from(-p.kbt);
            let weights = expm(&shifted);
            let gibbs = weights / weights.trace();
            let g = Generator::new(&p);
            let residual = max_abs(&g.rhs(t, &gibbs));
            assert!(residual <= 1e-9 * p.lambda * p.lambda, "residual {residual}, t = {t}, {p:?}");
            let slow = max_abs(&lindblad_rhs(&gibbs, t, &p));
            assert!(slow <= 1e-9 * p.lambda * p.lambda, "residual {slow}, t = {t}, {p:?}");
        }
    }

    fn density_from(re: [f64; 9], im: [f64; 9]) -> ComplexMat3 {
        let a = ComplexMat3::from_fn(|i, j| C64::new(re[3 * i + j], im[3 * i + j]));
        let rho = a * a.adjoint();
        rho / rho.trace()
    }

    proptest! {
        #[test]
        fn generator_preserves_trace_and_hermiticity(
            re in prop::array::uniform9(-1.0..1.0f64),
            im in prop::array::uniform9(-1.0..1.0f64),
            t in -80.0..80.0f64,
            lambda in 0.0..1.0f64,
            phi in 0.0..PI,
            varphi in 0.0..TAU,
            kbt in 1e-3..300.0f64,
        ) {
            prop_assume!(re.iter().any(|x| x.abs() > 1e-3));
            let rho = density_from(re, im);
            let p = ModelParams { lambda, phi, varphi, kbt, ..Default::default() };
            let d = Generator::new(&p).rhs(t, &rho);
            prop_assert!(d.trace().norm() < 1e-12);
            prop_assert!(hermiticity_defect(&d) < 1e-12);
        }

        #[test]
        fn fast_route_agrees_with_projector_route(
            re in prop::array::uniform9(-1.0..1.0f64),
            im in prop::array::uniform9(-1.0..1.0f64),
            t in -80.0..80.0f64,
            lambda in 0.0..1.0f64,
            phi in 0.0..PI,
            varphi in 0.0..TAU,
            kbt in 1e-3..300.0f64,
        ) {
            prop_assume!(re.iter().any(|x| x.abs() > 1e-3));
            let rho = density_from(re, im);
            let p = ModelParams { lambda, phi, varphi, kbt, ..Default::default() };
            let g = Generator::new(&p);
            let fast = g.rhs(t, &rho);
            let slow = davies_rhs(&hamiltonian_at(t, &p), &g.jumps(t), &rho);
            prop_assert!(max_abs(&(fast - slow)) < 1e-11 * omega_of_t(t, &p));
        }

        #[test]
        fn occupation_obeys_kms_relation(nu in 1e-6..50.0f64, kbt in 1e-2..100.0f64) {
            // N(ν) + 1 = e^{ν/kT} N(ν)
            let n = bose_occupation(nu, kbt).unwrap();
            let x = nu / kbt;
            prop_assume!(x < 600.0);
            prop_assert!((n + 1.0 - x.exp() * n).abs() <= 1e-9 * (n + 1.0));
        }
    }
}
