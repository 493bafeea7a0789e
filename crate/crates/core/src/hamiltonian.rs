//! The chirped spin-1 Hamiltonian `H(t) = κt·Jz + Ω·Jx` and its polar form
//! `H(t) = ω(t)·(cosθ·Jz + sinθ·Jx)`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;

use crate::spin_algebra::{spin1_operators, ComplexMat3};
use crate::{Error, Result};

/// Physical configuration of a run, in units where `Ω = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Chirp rate κ (Ω²).
    pub kappa: f64,
    /// Cascade coupling Ω; fixed to 1, it sets the frequency unit.
    pub omega_rabi: f64,
    /// Half duration t₀ (Ω⁻¹); the protocol runs over `[-t₀, t₀]`.
    pub t0: f64,
    /// System–bath coupling λ (√Ω), so `λ²` is a rate.
    pub lambda: f64,
    /// Polar angle φ of the coupling direction.
    pub phi: f64,
    /// Azimuthal angle ϕ of the coupling direction.
    pub varphi: f64,
    /// Bath temperature `k_B·T` (Ω).
    pub kbt: f64,
}

impl Default for ModelParams {
    /// Zero-temperature baseline with `κ = 0.25`, `κt₀ = 25`, `X = Jz`.
    fn default() -> Self {
        let kappa = 0.25;
        ModelParams {
            kappa,
            omega_rabi: 1.0,
            t0: Self::DEFAULT_KT0 / kappa,
            lambda: 0.0,
            phi: 0.0,
            varphi: 0.0,
            kbt: 0.001,
        }
    }
}

impl ModelParams {
    /// Default product `κ·t₀/Ω`.
    pub const DEFAULT_KT0: f64 = 25.0;

    /// Product `κ·t₀/Ω`, the asymptotic bare-energy splitting at the window edges.
    pub fn kt0(&self) -> f64 {
        self.kappa * self.t0 / self.omega_rabi
    }

    /// Sets κ and rescales t₀ so that `κ·t₀` is unchanged.
    pub fn with_kappa_fixed_kt0(mut self, kappa: f64) -> Self {
        let kt0 = self.kappa * self.t0;
        self.kappa = kappa;
        self.t0 = kt0 / kappa;
        self
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, key: &str, reason: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::invalid(key, reason))
            }
        }
        check(self.kappa.is_finite() && self.kappa > 0.0, "kappa", "must be positive")?;
        check(self.omega_rabi == 1.0, "omega_rabi", "the coupling Ω is the unit and must be 1")?;
        check(self.t0.is_finite() && self.t0 > 0.0, "t0", "must be positive")?;
        check(self.lambda.is_finite() && self.lambda >= 0.0, "lambda", "must be non-negative")?;
        check((0.0..=PI).contains(&self.phi), "phi", "must lie in [0, π]")?;
        check((0.0..TAU).contains(&self.varphi), "varphi", "must lie in [0, 2π)")?;
        check(self.kbt.is_finite() && self.kbt > 0.0, "kbt", "temperature must be positive")?;
        Ok(())
    }
}

/// Mixing angle `θ(t) = π/2 − arctan(κt/Ω)`, decreasing from π to 0.
pub fn theta_of_t(t: f64, p: &ModelParams) -> f64 {
    FRAC_PI_2 - (p.kappa * t / p.omega_rabi).atan()
}

/// Level spacing `ω(t) = √((κt)² + Ω²)`.
pub fn omega_of_t(t: f64, p: &ModelParams) -> f64 {
    (p.kappa * t).hypot(p.omega_rabi)
}

pub fn hamiltonian_at(t: f64, p: &ModelParams) -> ComplexMat3 {
    let (jx, _, jz) = spin1_operators();
    jz * Complex64::from(p.kappa * t) + jx * Complex64::from(p.omega_rabi)
}
