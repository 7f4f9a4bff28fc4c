//! Simulation and analytic toolkit for laser-driven trapped-ion gates driven
//! by traveling or phase-stable standing waves.
//!
//! All Hamiltonians are expressed in angular-frequency units (ħ = 1) in the
//! interaction picture with respect to the qubit and the motional mode.

pub mod analysis;
pub mod budget;
pub mod error;
pub mod evolution;
pub mod experiment;
pub mod hamiltonian;
pub mod hilbert;
pub mod lock;
pub mod scan;
pub mod special;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// 2π, handy for converting between Hz and rad/s.
pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Converts a frequency in Hz to an angular frequency in rad/s.
pub fn hz(f: f64) -> f64 {
    TWO_PI * f
}
