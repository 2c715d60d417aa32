use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;

use super::params::{ModelParams, Spin};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

/// Pauli string on up to 128 qubits in symplectic form: qubit k carries
/// X if only `x` bit k is set, Z if only `z`, Y if both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    pub x: u128,
    pub z: u128,
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString { x: 0, z: 0 };

    pub fn single(q: usize, p: Pauli) -> Self {
        Self::IDENTITY.with(q, p)
    }

    pub fn pair(a: usize, pa: Pauli, b: usize, pb: Pauli) -> Self {
        Self::IDENTITY.with(a, pa).with(b, pb)
    }

    pub fn with(mut self, q: usize, p: Pauli) -> Self {
        let bit = 1u128 << q;
        self.x &= !bit;
        self.z &= !bit;
        match p {
            Pauli::I => {}
            Pauli::X => self.x |= bit,
            Pauli::Z => self.z |= bit,
            Pauli::Y => {
                self.x |= bit;
                self.z |= bit;
            }
        }
        self
    }

    pub fn get(&self, q: usize) -> Pauli {
        match (self.x >> q & 1, self.z >> q & 1) {
            (0, 0) => Pauli::I,
            (1, 0) => Pauli::X,
            (0, 1) => Pauli::Z,
            _ => Pauli::Y,
        }
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    pub fn support(&self) -> Vec<usize> {
        let s = self.x | self.z;
        (0..128).filter(|q| s >> q & 1 == 1).collect()
    }

    /// Action on a computational basis state: P|b⟩ = phase · |b ⊕ x⟩.
    pub fn apply_to_basis(&self, b: u128) -> (C64, u128) {
        let y_count = (self.x & self.z).count_ones();
        let mut phase = match y_count % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
        if (b & self.z).count_ones() % 2 == 1 {
            phase = -phase;
        }
        (phase, b ^ self.x)
    }

    /// Product `self · other = i^k · result`, returning `(k mod 4, result)`.
    pub fn mul(&self, other: &PauliString) -> (u32, PauliString) {
        let a1 = (self.x & self.z).count_ones();
        let a2 = (other.x & other.z).count_ones();
        let swap = (self.z & other.x).count_ones();
        let result = PauliString {
            x: self.x ^ other.x,
            z: self.z ^ other.z,
        };
        let a3 = (result.x & result.z).count_ones();
        let k = (a1 + a2 + 2 * swap + 4 * 128 - a3) % 4;
        (k, result)
    }

    pub fn commutes(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    pub fn label(&self, n_qubits: usize) -> String {
        (0..n_qubits)
            .map(|q| match self.get(q) {
                Pauli::I => 'I',
                Pauli::X => 'X',
                Pauli::Y => 'Y',
                Pauli::Z => 'Z',
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliTerm {
    pub coeff: f64,
    pub string: PauliString,
}

/// Real-weighted sum of Pauli strings on `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    pub n_qubits: usize,
    pub terms: Vec<PauliTerm>,
}

impl PauliSum {
    pub fn new(n_qubits: usize) -> Self {
        PauliSum {
            n_qubits,
            terms: Vec::new(),
        }
    }

    /// Appends a term; exact zeros are skipped.
    pub fn push(&mut self, coeff: f64, string: PauliString) {
        if coeff != 0.0 {
            self.terms.push(PauliTerm { coeff, string });
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Dense matrix restricted to (and ordered by) the given basis states.
    pub fn to_dense_on(&self, states: &[u128]) -> DMatrix<C64> {
        let pos: HashMap<u128, usize> = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut m = DMatrix::zeros(states.len(), states.len());
        for (c, &b) in states.iter().enumerate() {
            for t in &self.terms {
                let (phase, out) = t.string.apply_to_basis(b);
                if let Some(&r) = pos.get(&out) {
                    m[(r, c)] += phase * t.coeff;
                }
            }
        }
        m
    }

    /// Dense matrix on the full 2^n computational basis (qubit k = bit k).
    pub fn to_dense(&self) -> DMatrix<C64> {
        assert!(self.n_qubits <= 14, "dense Pauli matrices limited to 14 qubits");
        let states: Vec<u128> = (0..1u128 << self.n_qubits).collect();
        self.to_dense_on(&states)
    }

    /// Whether `[self, other] = 0` exactly, by symbolic Pauli algebra.
    pub fn commutes_with(&self, other: &PauliSum, tol: f64) -> bool {
        let mut acc: HashMap<PauliString, C64> = HashMap::new();
        for a in &self.terms {
            for b in &other.terms {
                if a.string.commutes(&b.string) {
                    continue;
                }
                // anticommuting: [A, B] = 2AB
                let (k, s) = a.string.mul(&b.string);
                let phase = C64::i().powu(k);
                *acc.entry(s).or_default() += phase * (2.0 * a.coeff * b.coeff);
            }
        }
        acc.values().all(|c| c.norm() <= tol)
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.terms {
            writeln!(f, "{:+.12e} {}", t.coeff, t.string.label(self.n_qubits))?;
        }
        Ok(())
    }
}

/// Qubit form of the chain Hamiltonian on 2L qubits (↑ chain on qubits
/// 0…L−1, ↓ chain on L…2L−1).
///
/// Per chain: (J_σ/2)(XX + YY) + (V_σσ/4) ZZ on each bond; (U/4) Z_j Z_{L+j}
/// on each rung; single-Z terms −V_σσ/2 in the bulk and −V_σσ/4 at the two
/// ends. Identity terms and the U-induced single-Z terms are omitted: in a
/// fixed-number sector they only shift the energy. A non-zero `v_updn`
/// contributes its own diagonal ZZ and single-Z terms. Zero coefficients are
/// not emitted.
pub fn jordan_wigner(params: &ModelParams) -> PauliSum {
    let l = params.l;
    let mut h = PauliSum::new(2 * l);
    let mut linear = vec![0.0; 2 * l];

    for spin in Spin::BOTH {
        let off = if spin == Spin::Up { 0 } else { l };
        let j_sigma = params.hopping(spin);
        let v_sigma = params.same_spin_nn(spin);
        for j in 0..l.saturating_sub(1) {
            let (a, b) = (off + j, off + j + 1);
            h.push(j_sigma / 2.0, PauliString::pair(a, Pauli::X, b, Pauli::X));
            h.push(j_sigma / 2.0, PauliString::pair(a, Pauli::Y, b, Pauli::Y));
            h.push(v_sigma / 4.0, PauliString::pair(a, Pauli::Z, b, Pauli::Z));
            linear[a] -= v_sigma / 4.0;
            linear[b] -= v_sigma / 4.0;
        }
    }

    for j in 0..l {
        h.push(params.u / 4.0, PauliString::pair(j, Pauli::Z, l + j, Pauli::Z));
    }

    if params.v_updn != 0.0 {
        let v = params.v_updn;
        for j in 0..l.saturating_sub(1) {
            for (a, b) in [(j, l + j + 1), (j + 1, l + j)] {
                h.push(v / 4.0, PauliString::pair(a, Pauli::Z, b, Pauli::Z));
                linear[a] -= v / 4.0;
                linear[b] -= v / 4.0;
            }
        }
    }

    for (q, c) in linear.into_iter().enumerate() {
        h.push(c, PauliString::single(q, Pauli::Z));
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(h: &PauliSum, pred: impl Fn(&PauliString) -> bool) -> usize {
        h.terms.iter().filter(|t| pred(&t.string)).count()
    }

    #[test]
    fn term_count_l7() {
        let p = ModelParams::new(7, 0.2, 10.0, 10.0).unwrap();
        let h = jordan_wigner(&p);
        assert_eq!(h.len(), 57);
        assert_eq!(count(&h, |s| s.x != 0), 24);
        assert_eq!(count(&h, |s| s.x == 0 && s.weight() == 1), 14);
    }

    #[test]
    fn free_chain_has_only_hopping_terms() {
        let p = ModelParams::new(3, 1.0, 0.0, 0.0).unwrap();
        let h = jordan_wigner(&p);
        assert_eq!(h.len(), 8);
        for t in &h.terms {
            assert!(t.string.x != 0 && t.coeff == 0.5);
        }
    }

    #[test]
    fn linear_coefficients_bulk_and_boundary() {
        let p = ModelParams::new(5, 1.0, 0.0, 8.0).unwrap();
        let h = jordan_wigner(&p);
        let lin = |q: usize| {
            h.terms
                .iter()
                .find(|t| t.string == PauliString::single(q, Pauli::Z))
                .map(|t| t.coeff)
        };
        assert_eq!(lin(0), Some(-2.0));
        assert_eq!(lin(2), Some(-4.0));
        assert_eq!(lin(4), Some(-2.0));
        assert_eq!(lin(5), Some(-2.0));
        assert_eq!(lin(7), Some(-4.0));
    }

    #[test]
    fn pauli_products() {
        let x = PauliString::single(0, Pauli::X);
        let y = PauliString::single(0, Pauli::Y);
        let z = PauliString::single(0, Pauli::Z);
        // XY = iZ
        assert_eq!(x.mul(&y), (1, z));
        // YX = -iZ
        assert_eq!(y.mul(&x), (3, z));
        // ZX = iY
        assert_eq!(z.mul(&x), (1, y));
        assert_eq!(y.mul(&y), (0, PauliString::IDENTITY));
        assert!(!x.commutes(&z));
        let xx = PauliString::pair(0, Pauli::X, 1, Pauli::X);
        let zz = PauliString::pair(0, Pauli::Z, 1, Pauli::Z);
        assert!(xx.commutes(&zz));
    }

    #[test]
    fn basis_action_of_y() {
        let y = PauliString::single(0, Pauli::Y);
        assert_eq!(y.apply_to_basis(0), (C64::new(0.0, 1.0), 1));
        assert_eq!(y.apply_to_basis(1), (C64::new(0.0, -1.0), 0));
    }

    #[test]
    fn dense_matrix_is_hermitian() {
        let p = ModelParams::new(3, 0.4, 2.0, 3.0).unwrap();
        let m = jordan_wigner(&p).to_dense();
        assert!((&m - m.adjoint()).norm() < 1e-14);
    }

    #[test]
    fn conserves_both_component_numbers() {
        for l in [3, 4, 5] {
            let mut p = ModelParams::new(l, 0.3, 7.0, 5.0).unwrap();
            p.v_updn = 1.5;
            let h = jordan_wigner(&p);
            for off in [0, l] {
                let mut n = PauliSum::new(2 * l);
                for j in 0..l {
                    n.push(1.0, PauliString::single(off + j, Pauli::Z));
                }
                assert!(h.commutes_with(&n, 1e-14));
            }
            // sanity: a single Z_0 does not commute with the hopping
            let mut z0 = PauliSum::new(2 * l);
            z0.push(1.0, PauliString::single(0, Pauli::Z));
            assert!(!h.commutes_with(&z0, 1e-14));
        }
    }
}
