//! Few-fermion quantum walks in the one-dimensional extended Fermi-Hubbard
//! model, simulated two ways.
//!
//! The exact route ([`exact`]) evolves a fixed-(N↑, N↓) sector state under the
//! lattice Hamiltonian built in [`model`]. The circuit route maps the same
//! Hamiltonian onto 2L qubits ([`model::jordan_wigner`]), Trotterizes it
//! ([`trotter`]), compresses the result into a shallow U3/CZ ansatz
//! ([`recompile`]), samples it under stochastic Pauli noise ([`circuit`]) and
//! cleans the counts with post-selection and zero-noise extrapolation
//! ([`mitigate`]).

pub mod circuit;
pub mod exact;
pub mod linalg;
pub mod mitigate;
pub mod model;
pub mod recompile;
pub mod trotter;

mod error;
mod state;

pub use error::{Error, Result};
pub use state::{BasisTag, StateVector};

/// Complex amplitude type used throughout the crate.
pub type C64 = num_complex::Complex64;
