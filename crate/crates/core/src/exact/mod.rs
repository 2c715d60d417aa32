//! Exact reference pipeline: initial states, sector time evolution and the
//! pair/density/correlation observables.

mod evolve;
mod observables;

pub use evolve::{evolve, DensePropagator, KrylovOptions, KrylovPropagator, Method};
pub use observables::{measure, ObservableRecord};

use serde::{Deserialize, Serialize};

use crate::model::{FockState, ModelParams, SectorBasis};
use crate::{BasisTag, Error, Result, StateVector, C64};

/// The two three-particle starting configurations studied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialConfig {
    /// ↑ on sites −1 and 0, ↓ on +1 (center-relative).
    Walk,
    /// ↑ on −1 and +1, ↓ on +1: a doublon plus a free ↑.
    Dissociation,
}

impl InitialConfig {
    pub fn fock_state(&self, params: &ModelParams) -> Result<FockState> {
        if params.l < 3 {
            return Err(Error::Sector(format!("chain of {} sites cannot host the initial configuration", params.l)));
        }
        let (ups, dn) = match self {
            InitialConfig::Walk => ([-1, 0], 1),
            InitialConfig::Dissociation => ([-1, 1], 1),
        };
        let up = [params.site(ups[0])?, params.site(ups[1])?];
        Ok(FockState::from_sites(&up, &[params.site(dn)?]))
    }
}

pub fn sector_tag(basis: &SectorBasis) -> BasisTag {
    BasisTag::Sector {
        l: basis.l(),
        n_up: basis.n_up,
        n_dn: basis.n_dn,
    }
}

/// Unit vector on a single Fock state of the sector.
pub fn basis_state(basis: &SectorBasis, s: &FockState) -> Result<StateVector> {
    let idx = basis
        .index_of(s)
        .ok_or_else(|| Error::Sector(format!("{s:?} is not in the ({}, {}) sector", basis.n_up, basis.n_dn)))?;
    let mut amps = vec![C64::new(0.0, 0.0); basis.dim()];
    amps[idx] = C64::new(1.0, 0.0);
    Ok(StateVector {
        amps,
        basis: sector_tag(basis),
    })
}

pub fn initial_state(basis: &SectorBasis, config: InitialConfig) -> Result<StateVector> {
    if basis.n_up != 2 || basis.n_dn != 1 {
        return Err(Error::Sector(format!(
            "initial configurations need N↑ = 2, N↓ = 1, basis has ({}, {})",
            basis.n_up, basis.n_dn
        )));
    }
    basis_state(basis, &config.fock_state(&basis.params)?)
}

pub fn initial_state_walk(basis: &SectorBasis) -> Result<StateVector> {
    initial_state(basis, InitialConfig::Walk)
}

pub fn initial_state_dissoc(basis: &SectorBasis) -> Result<StateVector> {
    initial_state(basis, InitialConfig::Dissociation)
}

/// Sign relating the lattice hopping −J to the qubit hopping +J/2(XX+YY):
/// (−1)^(number of particles on odd sites).
fn sublattice_sign(s: &FockState) -> f64 {
    const ODD: u64 = 0xAAAA_AAAA_AAAA_AAAA;
    if ((s.up & ODD).count_ones() + (s.dn & ODD).count_ones()) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Embeds a sector state into the 2L-qubit register in the convention of
/// [`jordan_wigner`](crate::model::jordan_wigner) (including the sublattice
/// sign that maps −J hopping onto +J/2 (XX+YY)).
pub fn to_qubit_state(psi: &StateVector, basis: &SectorBasis) -> Result<StateVector> {
    check_sector(psi, basis)?;
    let l = basis.l();
    let n = 2 * l;
    if n > 30 {
        return Err(Error::Param(format!("{n} qubits is too many for a dense register")));
    }
    let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
    for (a, s) in psi.amps.iter().zip(basis.states()) {
        amps[s.qubit_index(l) as usize] = a * sublattice_sign(s);
    }
    Ok(StateVector {
        amps,
        basis: BasisTag::Qubits(n),
    })
}

/// Inverse of [`to_qubit_state`]; amplitude outside the sector is dropped.
pub fn from_qubit_state(q: &StateVector, basis: &SectorBasis) -> Result<StateVector> {
    let l = basis.l();
    if q.dim() != 1usize << (2 * l) {
        return Err(Error::Dimension {
            expected: 1 << (2 * l),
            got: q.dim(),
        });
    }
    let amps = basis
        .states()
        .iter()
        .map(|s| q.amps[s.qubit_index(l) as usize] * sublattice_sign(s))
        .collect();
    Ok(StateVector {
        amps,
        basis: sector_tag(basis),
    })
}

pub(crate) fn check_sector(psi: &StateVector, basis: &SectorBasis) -> Result<()> {
    if psi.dim() != basis.dim() {
        return Err(Error::Dimension {
            expected: basis.dim(),
            got: psi.dim(),
        });
    }
    Ok(())
}
