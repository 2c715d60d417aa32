use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::register_size;
use crate::{Error, Result, StateVector};

/// Measurement histogram. Outcomes are register indices (qubit k = bit k);
/// rendered as bitstrings, qubit 0 is the leftmost character.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    n_qubits: usize,
    counts: BTreeMap<u64, u64>,
    total: u64,
}

impl Counts {
    pub fn new(n_qubits: usize) -> Self {
        Counts {
            n_qubits,
            counts: BTreeMap::new(),
            total: 0,
        }
    }

    pub fn from_pairs(n_qubits: usize, pairs: impl IntoIterator<Item = (u64, u64)>) -> Self {
        let mut c = Counts::new(n_qubits);
        for (k, n) in pairs {
            c.add(k, n);
        }
        c
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn add(&mut self, outcome: u64, n: u64) {
        if n == 0 {
            return;
        }
        *self.counts.entry(outcome).or_insert(0) += n;
        self.total += n;
    }

    pub fn merge(&mut self, other: &Counts) {
        for (&k, &n) in &other.counts {
            self.add(k, n);
        }
    }

    pub fn total_shots(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn get(&self, outcome: u64) -> u64 {
        self.counts.get(&outcome).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(&k, &n)| (k, n))
    }

    pub fn retain(&self, mut keep: impl FnMut(u64) -> bool) -> Counts {
        Counts::from_pairs(self.n_qubits, self.iter().filter(|&(k, _)| keep(k)))
    }

    pub fn bitstring(&self, outcome: u64) -> String {
        (0..self.n_qubits)
            .map(|q| if outcome >> q & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    pub fn parse_bitstring(s: &str) -> Result<u64> {
        if s.len() > 64 {
            return Err(Error::Param(format!("bitstring longer than 64 qubits: {s:?}")));
        }
        s.chars().enumerate().try_fold(0u64, |acc, (q, ch)| match ch {
            '0' => Ok(acc),
            '1' => Ok(acc | (1u64 << q)),
            _ => Err(Error::Param(format!("invalid bitstring {s:?}"))),
        })
    }

    /// `bitstring,count` rows in ascending register-index order.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bitstring,count\n");
        for (k, n) in self.iter() {
            s.push_str(&format!("{},{}\n", self.bitstring(k), n));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Counts> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        match lines.next() {
            Some("bitstring,count") => {}
            other => return Err(Error::Param(format!("unexpected counts header {other:?}"))),
        }
        let mut n_qubits = None;
        let mut out = Vec::new();
        for line in lines {
            let (bits, n) = line
                .split_once(',')
                .ok_or_else(|| Error::Param(format!("malformed counts row {line:?}")))?;
            if *n_qubits.get_or_insert(bits.len()) != bits.len() {
                return Err(Error::Param(format!("inconsistent bitstring width in {line:?}")));
            }
            let n: u64 = n
                .trim()
                .parse()
                .map_err(|_| Error::Param(format!("malformed count in {line:?}")))?;
            out.push((Counts::parse_bitstring(bits)?, n));
        }
        Ok(Counts::from_pairs(n_qubits.unwrap_or(0), out))
    }
}

/// Multinomial draw of `shots` outcomes from |amplitude|².
pub fn sample(psi: &StateVector, shots: u64, seed: u64) -> Result<Counts> {
    let n = register_size(psi)?;
    if shots == 0 {
        return Err(Error::Param("shots must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = weighted(&psi.probabilities())?;
    let mut counts = Counts::new(n);
    draw_into(&mut counts, &dist, shots, &mut rng);
    Ok(counts)
}

pub(crate) fn weighted(probs: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(probs).map_err(|e| Error::Param(format!("cannot sample state: {e}")))
}

pub(crate) fn draw_into(counts: &mut Counts, dist: &WeightedIndex<f64>, shots: u64, rng: &mut ChaCha8Rng) {
    for _ in 0..shots {
        counts.add(dist.sample(rng) as u64, 1);
    }
}
