//! Spin-1 operators, y-rotations and the closed-form adiabatic eigenbasis.
//!
//! Basis order everywhere is `(|-1⟩_z, |0⟩_z, |1⟩_z)`, so `Jz = diag(-1, 0, 1)`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;

/// 3×3 complex matrix: operators, propagators and density matrices.
pub type ComplexMat3 = Matrix3<C64>;

/// Three complex amplitudes in the z basis.
pub type StateVec3 = Vector3<C64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Magnetic quantum number of a spin-1 level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    Down,
    Zero,
    Up,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Down, Level::Zero, Level::Up];

    pub fn m(self) -> i32 {
        match self {
            Level::Down => -1,
            Level::Zero => 0,
            Level::Up => 1,
        }
    }

    /// Position in the `(|-1⟩, |0⟩, |1⟩)` basis.
    pub fn index(self) -> usize {
        (self.m() + 1) as usize
    }
}

impl TryFrom<i32> for Level {
    type Error = Error;

    fn try_from(m: i32) -> Result<Self> {
        match m {
            -1 => Ok(Level::Down),
            0 => Ok(Level::Zero),
            1 => Ok(Level::Up),
            _ => Err(Error::Domain(format!(
                "spin-1 projection must be -1, 0 or 1, got {m}"
            ))),
        }
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let m: i32 = s
            .trim()
            .trim_start_matches('+')
            .parse()
            .map_err(|_| Error::Domain(format!("not a spin-1 projection: {s:?}")))?;
        Level::try_from(m)
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.m())
    }
}

/// Standard spin-1 matrices `(Jx, Jy, Jz)`.
pub fn spin1_operators() -> (ComplexMat3, ComplexMat3, ComplexMat3) {
    let r = C64::new(FRAC_1_SQRT_2, 0.0);
    let i = C64::new(0.0, FRAC_1_SQRT_2);
    #[rustfmt::skip]
    let jx = ComplexMat3::new(
        ZERO, r, ZERO,
        r, ZERO, r,
        ZERO, r, ZERO,
    );
    #[rustfmt::skip]
    let jy = ComplexMat3::new(
        ZERO, i, ZERO,
        -i, ZERO, i,
        ZERO, -i, ZERO,
    );
    let jz = ComplexMat3::from_diagonal(&Vector3::new(-ONE, ZERO, ONE));
    (jx, jy, jz)
}

/// `exp(iθ·Jy)` from the spin-1 identity `exp(iθJy) = 1 + i·sinθ·Jy + (cosθ - 1)·Jy²`.
///
/// The result is real orthogonal.
pub fn rotation_y(theta: f64) -> ComplexMat3 {
    let (_, jy, _) = spin1_operators();
    let (s, c) = theta.sin_cos();
    ComplexMat3::identity() + jy * C64::new(0.0, s) + jy * jy * C64::new(c - 1.0, 0.0)
}

/// Real amplitudes of `|m⟩_θ` in the z basis.
pub(crate) fn adiabatic_amplitudes(level: Level, theta: f64) -> [f64; 3] {
    let (s, c) = theta.sin_cos();
    let s = s * FRAC_1_SQRT_2;
    match level {
        Level::Down => [0.5 * (1.0 + c), -s, 0.5 * (1.0 - c)],
        Level::Zero => [s, c, -s],
        Level::Up => [0.5 * (1.0 - c), s, 0.5 * (1.0 + c)],
    }
}

/// Real orthogonal matrix whose columns are `|-1⟩_θ, |0⟩_θ, |1⟩_θ`.
pub(crate) fn adiabatic_frame(theta: f64) -> Matrix3<f64> {
    let [a, b, c] = Level::ALL.map(|l| Vector3::from(adiabatic_amplitudes(l, theta)));
    Matrix3::from_columns(&[a, b, c])
}

pub fn adiabatic_ket(level: Level, theta: f64) -> StateVec3 {
    Vector3::from(adiabatic_amplitudes(level, theta)).map(|x| C64::new(x, 0.0))
}

/// Instantaneous eigenstate `|m⟩_θ` of `Jθ = cosθ·Jz + sinθ·Jx`, with the
/// global phase fixed by the closed form.
pub fn adiabatic_state(m: i32, theta: f64) -> Result<StateVec3> {
    Ok(adiabatic_ket(Level::try_from(m)?, theta))
}

/// Bare state `|m⟩_z`.
pub fn bare_ket(level: Level) -> StateVec3 {
    let mut v = StateVec3::zeros();
    v[level.index()] = ONE;
    v
}

pub fn projector_of(level: Level, theta: f64) -> ComplexMat3 {
    let k = adiabatic_ket(level, theta);
    k * k.adjoint()
}

/// Eigenprojector `P_m(θ) = |m⟩_θ⟨m|`.
pub fn projector(m: i32, theta: f64) -> Result<ComplexMat3> {
    Ok(projector_of(Level::try_from(m)?, theta))
}

pub fn commutator(a: &ComplexMat3, b: &ComplexMat3) -> ComplexMat3 {
    a * b - b * a
}

pub fn anticommutator(a: &ComplexMat3, b: &ComplexMat3) -> ComplexMat3 {
    a * b + b * a
}

/// Largest entry modulus.
pub fn max_abs(a: &ComplexMat3) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn hermiticity_defect(a: &ComplexMat3) -> f64 {
    max_abs(&(a - a.adjoint()))
}

pub fn unitarity_defect(u: &ComplexMat3) -> f64 {
    max_abs(&(u.adjoint() * u - ComplexMat3::identity()))
}

/// Ascending eigenvalues of a Hermitian matrix (only the Hermitian part is used).
pub fn hermitian_eigenvalues(a: &ComplexMat3) -> [f64; 3] {
    let h = (a + a.adjoint()) * C64::new(0.5, 0.0);
    let ev = h.symmetric_eigenvalues();
    let mut out = [ev[0], ev[1], ev[2]];
    out.sort_by(f64::total_cmp);
    out
}
