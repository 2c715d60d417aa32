//! Gate-level circuits on a dense 2^n register, shot sampling and a
//! stochastic Pauli-noise backend.

mod counts;
mod gate;
pub mod kernels;
mod noise;

pub use counts::{sample, Counts};
pub use gate::{u3_matrix, Gate, Mat2, Mat4};
pub use noise::{run_noisy, NoiseModel};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{BasisTag, Error, Result, StateVector, C64};

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 26;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            gates: Vec::new(),
        }
    }

    pub fn from_gates(n_qubits: usize, gates: impl IntoIterator<Item = Gate>) -> Result<Self> {
        let mut c = Circuit::new(n_qubits);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, g: Gate) -> Result<()> {
        g.validate(self.n_qubits)?;
        self.gates.push(g);
        Ok(())
    }

    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        if other.n_qubits > self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                got: other.n_qubits,
            });
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    pub fn count_named(&self, name: &str) -> usize {
        self.gates.iter().filter(|g| g.name() == name).count()
    }

    pub fn inverse(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().map(Gate::dagger).collect(),
        }
    }

    /// Plain-text gate list, one `NAME q0 [q1] [angles…]` per line after a
    /// `# qubits N` header.
    pub fn to_text(&self) -> String {
        let mut s = format!("# qubits {}\n", self.n_qubits);
        for g in &self.gates {
            s.push_str(&g.to_string());
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Circuit> {
        let mut n_qubits = None;
        let mut gates = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(n) = rest.trim().strip_prefix("qubits") {
                    n_qubits = Some(
                        n.trim()
                            .parse()
                            .map_err(|_| Error::Param(format!("bad qubit header {line:?}")))?,
                    );
                }
                continue;
            }
            gates.push(line.parse::<Gate>()?);
        }
        let n = n_qubits.ok_or_else(|| Error::Param("missing '# qubits N' header".into()))?;
        Circuit::from_gates(n, gates)
    }

    /// Dense unitary, column k = circuit applied to |k⟩. Small registers only.
    pub fn unitary(&self) -> Result<DMatrix<C64>> {
        if self.n_qubits > 12 {
            return Err(Error::Param(format!("unitary of {} qubits is too large", self.n_qubits)));
        }
        let dim = 1usize << self.n_qubits;
        let mut u = DMatrix::zeros(dim, dim);
        for k in 0..dim {
            let out = run(self, &StateVector::qubit_basis_state(self.n_qubits, k))?;
            for (r, a) in out.amps.iter().enumerate() {
                u[(r, k)] = *a;
            }
        }
        Ok(u)
    }
}

pub(crate) fn register_size(psi: &StateVector) -> Result<usize> {
    let n = match psi.basis {
        BasisTag::Qubits(n) => n,
        BasisTag::Sector { .. } => {
            return Err(Error::Param("circuits act on qubit registers, not sector states".into()))
        }
    };
    if n > MAX_QUBITS || psi.dim() != 1usize << n {
        return Err(Error::Dimension {
            expected: 1usize << n.min(MAX_QUBITS),
            got: psi.dim(),
        });
    }
    Ok(n)
}

pub fn apply(psi: &mut StateVector, g: &Gate) -> Result<()> {
    let n = register_size(psi)?;
    g.validate(n)?;
    kernels::apply_gate(&mut psi.amps, g);
    Ok(())
}

pub fn run(c: &Circuit, psi0: &StateVector) -> Result<StateVector> {
    let n = register_size(psi0)?;
    if n != c.n_qubits {
        return Err(Error::Dimension {
            expected: c.n_qubits,
            got: n,
        });
    }
    let mut psi = psi0.clone();
    for g in &c.gates {
        kernels::apply_gate(&mut psi.amps, g);
    }
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    #[test]
    fn x_sets_bit() {
        let mut psi = StateVector::zero_qubits(4);
        apply(&mut psi, &Gate::X { q: 2 }).unwrap();
        assert_eq!(psi.amps[0b0100], C64::new(1.0, 0.0));
        assert_eq!(psi.norm(), 1.0);
    }

    #[test]
    fn u3_zero_leaves_state() {
        let mut psi = StateVector::zero_qubits(3);
        for q in 0..3 {
            apply(&mut psi, &Gate::U3 { q, theta: 1.0 + q as f64, phi: 0.3, lambda: -0.2 }).unwrap();
        }
        let before = psi.clone();
        apply(&mut psi, &Gate::U3 { q: 1, theta: 0.0, phi: 0.0, lambda: 0.0 }).unwrap();
        assert!(linalg::distance(&before.amps, &psi.amps) < 1e-15);
    }

    #[test]
    fn cz_on_11() {
        let mut psi = StateVector::qubit_basis_state(2, 0b11);
        apply(&mut psi, &Gate::Cz { a: 0, b: 1 }).unwrap();
        assert_eq!(psi.amps[3], C64::new(-1.0, 0.0));
    }

    #[test]
    fn cnot_flips_target_when_control_set() {
        let mut psi = StateVector::qubit_basis_state(3, 0b001);
        apply(&mut psi, &Gate::Cnot { control: 0, target: 2 }).unwrap();
        assert_eq!(psi.amps[0b101], C64::new(1.0, 0.0));
        let mut psi = StateVector::qubit_basis_state(3, 0b100);
        apply(&mut psi, &Gate::Cnot { control: 0, target: 2 }).unwrap();
        assert_eq!(psi.amps[0b100], C64::new(1.0, 0.0));
    }

    #[test]
    fn out_of_range_gate_is_an_error() {
        let mut psi = StateVector::zero_qubits(2);
        assert_eq!(
            apply(&mut psi, &Gate::X { q: 2 }),
            Err(Error::QubitIndex { index: 2, n_qubits: 2 })
        );
        assert!(Circuit::from_gates(2, [Gate::Cz { a: 0, b: 5 }]).is_err());
    }

    #[test]
    fn empty_and_xx_circuits() {
        let psi0 = StateVector::zero_qubits(3);
        assert_eq!(run(&Circuit::new(3), &psi0).unwrap(), psi0);
        let c = Circuit::from_gates(3, [Gate::X { q: 0 }, Gate::X { q: 2 }]).unwrap();
        let out = run(&c, &psi0).unwrap();
        assert_eq!(out.amps[0b101], C64::new(1.0, 0.0));
    }

    /// Kernel action agrees with the 4×4 matrices (first qubit = high bit).
    #[test]
    fn kernels_match_two_qubit_matrices() {
        for g in [
            Gate::Cz { a: 1, b: 0 },
            Gate::Cnot { control: 1, target: 0 },
            Gate::Rzz { a: 1, b: 0, angle: 0.37 },
        ] {
            let u = Circuit::from_gates(2, [g]).unwrap().unitary().unwrap();
            let m = g.matrix2().unwrap();
            for r in 0..4 {
                for c in 0..4 {
                    assert!((u[(r, c)] - m[r][c]).norm() < 1e-15, "{g} ({r},{c})");
                }
            }
        }
    }

    #[test]
    fn circuit_text_round_trip_and_inverse() {
        let c = Circuit::from_gates(
            3,
            [
                Gate::U3 { q: 0, theta: 0.3, phi: 0.1, lambda: -0.7 },
                Gate::Cnot { control: 0, target: 1 },
                Gate::Rzz { a: 1, b: 2, angle: 1.2 },
                Gate::Rz { q: 2, angle: 0.4 },
            ],
        )
        .unwrap();
        assert_eq!(Circuit::from_text(&c.to_text()).unwrap(), c);
        let mut both = c.clone();
        both.append(&c.inverse()).unwrap();
        let u = both.unitary().unwrap();
        assert!((u - DMatrix::identity(8, 8)).norm() < 1e-13);
        assert!(Circuit::from_text("X 0\n").is_err());
    }
}
