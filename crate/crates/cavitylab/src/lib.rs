//! Simulation toolkit for coupled atom-cavity arrays.
//!
//! The crate covers the full pipeline from microscopic model to logical
//! circuits: Jaynes-Cummings-Hubbard lattice Hamiltonians, the polariton
//! qubit encoding and its effective XY spin model, the measurement-mediated
//! two-qubit gate on a three-site segment, Lindblad treatment of cavity and
//! atom decay, and a compiler that lowers logical circuits to the native
//! gate schedule with permutation and byproduct tracking.
//!
//! Conventions, fixed once and used everywhere:
//!
//! - A site is a two-level atom coupled to a truncated cavity mode. The site
//!   basis is |atom, n> with index `atom * (n_max + 1) + n`; atom 0 is |g>,
//!   atom 1 is |e>. The atom index is slow, the photon index fast.
//! - In tensor products site 0 is the slowest (most significant) index.
//!   Likewise, qubit 0 is the most significant bit of a register index.
//! - `sigma_z = diag(+1, -1)`, so the vacuum-label state |0> has eigenvalue
//!   +1. `sigma_plus = |1><0|` raises the occupation label.
//! - The rotating frame `omega_d = omega_0 = 0` is the default for protocol
//!   work; absolute frequencies are supported for spectrum output.

pub mod compiler;
pub mod dynamics;
pub mod error;
pub mod gate_protocol;
pub mod jch_model;
pub mod operators;
pub mod polariton;
pub mod random;
pub mod selftest;
pub mod tolerances;

pub use error::{Error, Result};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Dense complex matrix, the working type for all operators.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex vector, the working type for pure states.
pub type CVector = DVector<Complex64>;

/// Shorthand for a real complex scalar.
pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Shorthand for a general complex scalar.
pub fn ci(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
