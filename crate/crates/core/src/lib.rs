//! Numerical workbench for ergodic Hankel operators.
//!
//! The crate builds finite sections of Hankel integral operators transplanted
//! to L²(ℝ), computes their spectra and integrated densities of states,
//! evaluates Floquet–Bloch band structures of periodic operators and simulates
//! the random Kronig–Penney–Hankel ensemble.

pub mod error;
pub mod floquet;
mod linalg;
pub mod measures;
pub mod operators;
pub mod rkph;
pub mod specfun;
pub mod spectra;

pub use error::{Error, Result};

/// Formats a float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
