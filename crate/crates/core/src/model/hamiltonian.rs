use nalgebra::DMatrix;

use super::basis::{FockState, SectorBasis};
use super::params::Spin;
use crate::C64;

/// Real symmetric sector Hamiltonian in compressed-row form.
#[derive(Debug, Clone)]
pub struct SparseHamiltonian {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseHamiltonian {
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                match cols.last() {
                    Some(&last) if cols.len() > *row_ptr.last().unwrap() && last == c => {
                        *vals.last_mut().unwrap() += v;
                    }
                    _ => {
                        cols.push(c);
                        vals.push(v);
                    }
                }
            }
            row_ptr.push(cols.len());
        }
        SparseHamiltonian {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `(row, col, value)` triplets in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[range.clone()].binary_search(&c) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self, r: usize) -> f64 {
        self.get(r, r)
    }

    /// `out = H x`
    pub fn matvec(&self, x: &[C64], out: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(out.len(), self.dim);
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += x[self.cols[k]] * self.vals[k];
            }
            *o = acc;
        }
    }

    /// ⟨x|H|x⟩ (real because H is symmetric).
    pub fn expectation(&self, x: &[C64]) -> f64 {
        let mut hx = vec![C64::new(0.0, 0.0); self.dim];
        self.matvec(x, &mut hx);
        x.iter().zip(&hx).map(|(a, b)| (a.conj() * b).re).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn is_symmetric(&self) -> bool {
        self.triplets().all(|(r, c, v)| self.get(c, r) == v)
    }
}

/// Sign of `a†_to a_from` acting on the occupation word `occ`: the parity of
/// occupied modes strictly between the two mode positions.
pub(crate) fn hop_sign(occ: u128, from: usize, to: usize) -> f64 {
    let (lo, hi) = if from < to { (from, to) } else { (to, from) };
    if hi - lo <= 1 {
        return 1.0;
    }
    let between = ((1u128 << hi) - 1) & !((1u128 << (lo + 1)) - 1);
    if (occ & between).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn diagonal_energy(s: &FockState, basis: &SectorBasis) -> f64 {
    let p = &basis.params;
    let nn = |a: u64, b: u64| ((a & (b >> 1)).count_ones() + (b & (a >> 1)).count_ones()) as f64;
    let same = |a: u64| (a & (a >> 1)).count_ones() as f64;
    p.u * s.doublons() as f64
        + p.v_upup * same(s.up)
        + p.v_dndn * same(s.dn)
        + p.v_updn * nn(s.up, s.dn)
}

/// Sector matrix of the lattice Hamiltonian, open boundaries.
///
/// Modes are ordered ↑0 … ↑(L−1), ↓0 … ↓(L−1) for the fermionic sign.
pub fn build_fock_hamiltonian(basis: &SectorBasis) -> SparseHamiltonian {
    let l = basis.l();
    let mut rows = Vec::with_capacity(basis.dim());
    for s in basis.states() {
        let mut row = vec![(basis.index_of(s).unwrap(), diagonal_energy(s, basis))];
        let occ = s.qubit_index(l);
        for spin in Spin::BOTH {
            let j_sigma = basis.params.hopping(spin);
            if j_sigma == 0.0 {
                continue;
            }
            let offset = if spin == Spin::Up { 0 } else { l };
            let bits = s.occupation(spin);
            for j in 0..l.saturating_sub(1) {
                for (from, to) in [(j, j + 1), (j + 1, j)] {
                    if bits >> from & 1 == 1 && bits >> to & 1 == 0 {
                        let moved = bits & !(1u64 << from) | (1u64 << to);
                        let target = s.with_occupation(spin, moved);
                        let col = basis.index_of(&target).expect("hop stays in sector");
                        let sign = hop_sign(occ, offset + from, offset + to);
                        row.push((col, -j_sigma * sign));
                    }
                }
            }
        }
        rows.push(row);
    }
    SparseHamiltonian::from_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_sector_basis, ModelParams};
    use crate::linalg::eigh;

    #[test]
    fn nn_pair_diagonal() {
        let p = ModelParams::new(7, 1.0, 10.0, 10.0).unwrap();
        let b = build_sector_basis(&p, 2, 1).unwrap();
        let h = build_fock_hamiltonian(&b);
        let i = b.index_of(&FockState::from_sites(&[0, 1], &[4])).unwrap();
        assert_eq!(h.diagonal(i), 10.0);
    }

    #[test]
    fn doublon_diagonal() {
        let p = ModelParams::new(5, 1.0, 3.5, 10.0).unwrap();
        let b = build_sector_basis(&p, 1, 1).unwrap();
        let h = build_fock_hamiltonian(&b);
        let i = b.index_of(&FockState::from_sites(&[0], &[0])).unwrap();
        assert_eq!(h.diagonal(i), 3.5);
    }

    #[test]
    fn inter_component_nn_diagonal() {
        let mut p = ModelParams::new(5, 1.0, 0.0, 0.0).unwrap();
        p.v_updn = 2.0;
        let b = build_sector_basis(&p, 1, 2).unwrap();
        let h = build_fock_hamiltonian(&b);
        // ↑ at 2 neighbours ↓ at 1 and 3.
        let i = b.index_of(&FockState::from_sites(&[2], &[1, 3])).unwrap();
        assert_eq!(h.diagonal(i), 4.0);
    }

    #[test]
    fn symmetric_with_bounded_degree() {
        let p = ModelParams::new(7, 0.3, 4.0, 2.0).unwrap();
        let b = build_sector_basis(&p, 2, 1).unwrap();
        let h = build_fock_hamiltonian(&b);
        assert!(h.is_symmetric());
        for r in 0..h.dim() {
            // 3 particles, each with at most two neighbours
            assert!(h.row(r).count() <= 2 * 3 + 1);
        }
    }

    #[test]
    fn hop_sign_counts_modes_between() {
        assert_eq!(hop_sign(0b0000, 0, 3), 1.0);
        assert_eq!(hop_sign(0b0100, 0, 3), -1.0);
        assert_eq!(hop_sign(0b0110, 3, 0), 1.0);
        assert_eq!(hop_sign(0b1111, 1, 2), 1.0);
    }

    /// Two-site, one-↑ dense check: eigenvalues ±J.
    #[test]
    fn two_site_single_particle_spectrum() {
        let p = ModelParams::new(2, 1.0, 0.0, 0.0).unwrap();
        let b = build_sector_basis(&p, 1, 0).unwrap();
        let h = build_fock_hamiltonian(&b).to_dense();
        let (ev, _) = eigh(h);
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    /// Ground energy of the 16-dim sector against an independent dense build
    /// written from creation/annihilation matrices (Jordan-Wigner on 8 modes).
    #[test]
    fn l4_ground_energy_matches_mode_operator_oracle() {
        let p = ModelParams::new(4, 1.0, 4.0, 0.0).unwrap();
        let b = build_sector_basis(&p, 1, 1).unwrap();
        let h = build_fock_hamiltonian(&b).to_dense();
        let (ev, _) = eigh(h);

        let oracle = mode_operator_hamiltonian(&p);
        // restrict to N↑=1, N↓=1
        let keep: Vec<usize> = (0..256usize)
            .filter(|&i| (i & 0xF).count_ones() == 1 && (i >> 4).count_ones() == 1)
            .collect();
        let sub = DMatrix::from_fn(keep.len(), keep.len(), |r, c| oracle[(keep[r], keep[c])]);
        let (ev2, _) = eigh(sub);
        assert_eq!(ev.len(), 16);
        for (a, b) in ev.iter().zip(&ev2) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    /// Dense H on all 2^(2L) occupations from explicit JW mode matrices.
    fn mode_operator_hamiltonian(p: &ModelParams) -> DMatrix<f64> {
        let modes = 2 * p.l;
        let dim = 1 << modes;
        // a_m |n⟩ = (-1)^{Σ_{k<m} n_k} |n - e_m⟩
        let annihilate = |m: usize| {
            DMatrix::from_fn(dim, dim, |r, c| {
                if c >> m & 1 == 1 && r == c ^ (1 << m) {
                    if (c & ((1 << m) - 1)).count_ones() % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                } else {
                    0.0
                }
            })
        };
        let a: Vec<DMatrix<f64>> = (0..modes).map(annihilate).collect();
        let n: Vec<DMatrix<f64>> = a.iter().map(|x| x.transpose() * x).collect();
        let mut h = DMatrix::zeros(dim, dim);
        for (off, j_s, v_s) in [(0, p.j_up, p.v_upup), (p.l, p.j_dn, p.v_dndn)] {
            for j in 0..p.l - 1 {
                let hop = a[off + j].transpose() * &a[off + j + 1];
                h -= (&hop + hop.transpose()) * j_s;
                h += &n[off + j] * &n[off + j + 1] * v_s;
            }
        }
        for j in 0..p.l {
            h += &n[j] * &n[p.l + j] * p.u;
        }
        h
    }
}
