//! Simulator for the dissipative three-state (spin-1) Majorana model.
//!
//! The system Hamiltonian is the linearly chirped spin-1 operator
//! `H(t) = κt·Jz + Ω·Jx`. Coupling to a bosonic bath through `λ·X ⊗ B`
//! is treated with a time-dependent Davies generator whose jump operators
//! connect the instantaneous eigenspaces of `H(t)`. The crate integrates
//! the resulting master equation over `[-t₀, t₀]` and measures the
//! population-transfer efficiency between bare states, over single runs,
//! parameter grids, temperature curves and an optimal chirp-rate search.
//!
//! Units: `Ω = 1` sets the frequency scale and `ħ = 1`.

pub mod cli;
pub mod config;
pub mod csv;
pub mod dissipator;
mod error;
pub mod experiments;
pub mod hamiltonian;
pub mod integrator;
pub mod ode;
pub mod spin_algebra;

pub use error::{Error, Result};
pub use hamiltonian::ModelParams;
pub use integrator::{DensityMatrix, SolverConfig, Trajectory};
pub use spin_algebra::{ComplexMat3, Level, StateVec3};
