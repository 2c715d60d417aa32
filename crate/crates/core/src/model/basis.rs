use std::collections::HashMap;

use super::params::{ModelParams, Spin};
use crate::{Error, Result};

/// Occupation of both components as per-site bitmasks (bit j = site j).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockState {
    pub up: u64,
    pub dn: u64,
}

impl FockState {
    pub fn from_sites(up_sites: &[usize], dn_sites: &[usize]) -> Self {
        let mask = |sites: &[usize]| sites.iter().fold(0u64, |m, &s| m | (1u64 << s));
        FockState {
            up: mask(up_sites),
            dn: mask(dn_sites),
        }
    }

    pub fn occupation(&self, spin: Spin) -> u64 {
        match spin {
            Spin::Up => self.up,
            Spin::Down => self.dn,
        }
    }

    pub fn with_occupation(self, spin: Spin, occ: u64) -> Self {
        match spin {
            Spin::Up => FockState { up: occ, ..self },
            Spin::Down => FockState { dn: occ, ..self },
        }
    }

    /// Computational-basis index on 2L qubits: qubit j holds ↑ site j,
    /// qubit L+j holds ↓ site j, |1⟩ = occupied.
    pub fn qubit_index(&self, l: usize) -> u128 {
        self.up as u128 | ((self.dn as u128) << l)
    }

    pub fn from_qubit_index(index: u128, l: usize) -> Self {
        let mask = if l >= 64 { u64::MAX } else { (1u64 << l) - 1 };
        FockState {
            up: (index as u64) & mask,
            dn: ((index >> l) as u64) & mask,
        }
    }

    pub fn doublons(&self) -> u32 {
        (self.up & self.dn).count_ones()
    }
}

/// Ordered basis of the fixed-(N↑, N↓) sector, lexicographic on (up, dn).
#[derive(Debug, Clone)]
pub struct SectorBasis {
    pub params: ModelParams,
    pub n_up: usize,
    pub n_dn: usize,
    states: Vec<FockState>,
    index: HashMap<FockState, usize>,
}

impl SectorBasis {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn l(&self) -> usize {
        self.params.l
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> FockState {
        self.states[i]
    }

    pub fn index_of(&self, s: &FockState) -> Option<usize> {
        self.index.get(s).copied()
    }
}

pub fn build_sector_basis(params: &ModelParams, n_up: usize, n_dn: usize) -> Result<SectorBasis> {
    params.validate()?;
    let l = params.l;
    if n_up > l || n_dn > l {
        return Err(Error::Param(format!(
            "particle numbers (n_up = {n_up}, n_dn = {n_dn}) exceed L = {l}"
        )));
    }
    let ups = combinations(l, n_up);
    let dns = combinations(l, n_dn);
    let mut states = Vec::with_capacity(ups.len() * dns.len());
    for &up in &ups {
        for &dn in &dns {
            states.push(FockState { up, dn });
        }
    }
    let index = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    Ok(SectorBasis {
        params: *params,
        n_up,
        n_dn,
        states,
        index,
    })
}

/// All `k`-bit subsets of `n` bits in increasing numeric order (Gosper's hack).
pub(crate) fn combinations(n: usize, k: usize) -> Vec<u64> {
    if k == 0 {
        return vec![0];
    }
    if k > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let limit: u128 = 1u128 << n;
    let mut c: u128 = (1u128 << k) - 1;
    while c < limit {
        out.push(c as u64);
        let lowest = c & c.wrapping_neg();
        let ripple = c + lowest;
        c = (((ripple ^ c) >> 2) / lowest) | ripple;
    }
    out
}
