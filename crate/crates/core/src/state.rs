use crate::linalg;
use crate::{Error, Result, C64};

/// Which basis the amplitudes refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisTag {
    /// Ordinal of a [`SectorBasis`](crate::model::SectorBasis) state.
    Sector { l: usize, n_up: usize, n_dn: usize },
    /// Computational basis of `n` qubits, qubit k = bit k of the index.
    Qubits(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub amps: Vec<C64>,
    pub basis: BasisTag,
}

impl StateVector {
    pub fn zero_qubits(n_qubits: usize) -> Self {
        Self::qubit_basis_state(n_qubits, 0)
    }

    pub fn qubit_basis_state(n_qubits: usize, index: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n_qubits];
        amps[index] = C64::new(1.0, 0.0);
        StateVector {
            amps,
            basis: BasisTag::Qubits(n_qubits),
        }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amps)
    }

    pub fn n_qubits(&self) -> Option<usize> {
        match self.basis {
            BasisTag::Qubits(n) => Some(n),
            BasisTag::Sector { .. } => None,
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.check_same_dim(other)?;
        Ok(linalg::inner(&self.amps, &other.amps))
    }

    /// |⟨self|other⟩|²
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn distance(&self, other: &StateVector) -> Result<f64> {
        self.check_same_dim(other)?;
        Ok(linalg::distance(&self.amps, &other.amps))
    }

    pub fn phase_aligned_distance(&self, other: &StateVector) -> Result<f64> {
        self.check_same_dim(other)?;
        Ok(linalg::phase_aligned_distance(&self.amps, &other.amps))
    }

    pub(crate) fn check_same_dim(&self, other: &StateVector) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }
}
