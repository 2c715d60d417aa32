//! The extended Fermi-Hubbard chain: couplings, the fixed-number Fock basis,
//! the sector Hamiltonian and its Jordan-Wigner qubit form.

mod basis;
mod hamiltonian;
mod params;
mod pauli;

pub use basis::{build_sector_basis, FockState, SectorBasis};
pub use hamiltonian::{build_fock_hamiltonian, SparseHamiltonian};
pub use params::{ModelParams, Spin, MAX_SITES};
pub use pauli::{jordan_wigner, Pauli, PauliString, PauliSum, PauliTerm};
