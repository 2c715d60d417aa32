use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::counts::{draw_into, weighted};
use super::{kernels, register_size, run, Circuit, Counts};
use crate::{Error, Result, StateVector, C64};

/// Per-gate depolarizing noise, sampled as stochastic Pauli insertions.
///
/// After a gate acting on k qubits, with probability `p` (p1 or p2) a Pauli
/// drawn uniformly from all 4^k strings is applied, so p = 1 fully
/// depolarizes the gate's qubits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub p1: f64,
    pub p2: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            p1: 0.001,
            p2: 0.01,
            seed: 0,
        }
    }
}

impl NoiseModel {
    pub fn new(p1: f64, p2: f64, seed: u64) -> Result<Self> {
        let nm = NoiseModel { p1, p2, seed };
        nm.validate()?;
        Ok(nm)
    }

    pub fn noiseless(seed: u64) -> Self {
        NoiseModel { p1: 0.0, p2: 0.0, seed }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p1", self.p1), ("p2", self.p2)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Param(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.p1 == 0.0 && self.p2 == 0.0
    }
}

/// A Pauli inserted right after gate `after`; `paulis` packs two 2-bit codes
/// (0 = I, 1 = X, 2 = Y, 3 = Z) for the gate's first and second qubit.
#[derive(Debug, Clone, Copy)]
struct Fault {
    after: usize,
    paulis: u8,
}

fn draw_faults(c: &Circuit, nm: &NoiseModel, rng: &mut ChaCha8Rng) -> Vec<Fault> {
    let mut faults = Vec::new();
    for (i, g) in c.gates().iter().enumerate() {
        let (p, n_strings) = if g.is_two_qubit() { (nm.p2, 16) } else { (nm.p1, 4) };
        if p > 0.0 && rng.gen::<f64>() < p {
            let paulis = rng.gen_range(0..n_strings) as u8;
            if paulis != 0 {
                faults.push(Fault { after: i, paulis });
            }
        }
    }
    faults
}

/// Ideal run with stored intermediate states, so faulty trajectories restart
/// from the last checkpoint before their first fault.
struct Checkpoints {
    stride: usize,
    states: Vec<Vec<C64>>,
    final_state: StateVector,
}

impl Checkpoints {
    const MEMORY_BUDGET: usize = 64 << 20;

    fn new(c: &Circuit, psi0: &StateVector) -> Self {
        let state_bytes = psi0.dim() * std::mem::size_of::<C64>();
        let max_states = (Self::MEMORY_BUDGET / state_bytes.max(1)).clamp(1, 64);
        let stride = c.len().div_ceil(max_states).max(1);
        let mut states = Vec::new();
        let mut amps = psi0.amps.clone();
        for (i, g) in c.gates().iter().enumerate() {
            if i % stride == 0 {
                states.push(amps.clone());
            }
            kernels::apply_gate(&mut amps, g);
        }
        Checkpoints {
            stride,
            states,
            final_state: StateVector {
                amps,
                basis: psi0.basis,
            },
        }
    }

    fn run_with_faults(&self, c: &Circuit, faults: &[Fault]) -> Vec<C64> {
        let start = faults[0].after / self.stride * self.stride;
        let mut amps = self.states[start / self.stride].clone();
        let mut next = faults.iter().peekable();
        for (i, g) in c.gates().iter().enumerate().skip(start) {
            kernels::apply_gate(&mut amps, g);
            while let Some(f) = next.next_if(|f| f.after == i) {
                let (a, b) = g.qubits();
                kernels::apply_pauli(&mut amps, a, f.paulis & 3);
                if let Some(b) = b {
                    kernels::apply_pauli(&mut amps, b, f.paulis >> 2);
                }
            }
        }
        amps
    }
}

/// Monte-Carlo noisy execution. Trajectory k draws from the ChaCha8 stream k
/// of `nm.seed`, so results do not depend on the thread count.
pub fn run_noisy(
    c: &Circuit,
    psi0: &StateVector,
    nm: &NoiseModel,
    trajectories: usize,
    shots_per_traj: u64,
) -> Result<Counts> {
    nm.validate()?;
    if trajectories == 0 {
        return Err(Error::Param("trajectories must be positive".into()));
    }
    if shots_per_traj == 0 {
        return Err(Error::Param("shots per trajectory must be positive".into()));
    }
    let n = register_size(psi0)?;
    if nm.is_noiseless() {
        let ideal = run(c, psi0)?;
        let dist = weighted(&ideal.probabilities())?;
        let mut counts = Counts::new(n);
        for k in 0..trajectories {
            draw_into(&mut counts, &dist, shots_per_traj, &mut trajectory_rng(nm.seed, k));
        }
        return Ok(counts);
    }
    if n != c.n_qubits() {
        return Err(Error::Dimension {
            expected: c.n_qubits(),
            got: n,
        });
    }
    let cp = Checkpoints::new(c, psi0);
    let ideal = weighted(&cp.final_state.probabilities())?;
    let per_traj: Vec<Result<Counts>> = (0..trajectories)
        .into_par_iter()
        .map(|k| {
            let mut rng = trajectory_rng(nm.seed, k);
            let faults = draw_faults(c, nm, &mut rng);
            let mut counts = Counts::new(n);
            if faults.is_empty() {
                draw_into(&mut counts, &ideal, shots_per_traj, &mut rng);
            } else {
                let amps = cp.run_with_faults(c, &faults);
                let probs: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
                draw_into(&mut counts, &weighted(&probs)?, shots_per_traj, &mut rng);
            }
            Ok(counts)
        })
        .collect();
    let mut total = Counts::new(n);
    for counts in per_traj {
        total.merge(&counts?);
    }
    Ok(total)
}

fn trajectory_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{sample, Gate};

    fn ghz3() -> Circuit {
        Circuit::from_gates(
            3,
            [
                Gate::U3 { q: 0, theta: 1.1, phi: 0.0, lambda: 0.0 },
                Gate::Cnot { control: 0, target: 1 },
                Gate::Cnot { control: 1, target: 2 },
                Gate::U3 { q: 2, theta: 0.4, phi: 0.3, lambda: 0.0 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn validation() {
        assert!(NoiseModel::new(-0.1, 0.0, 0).is_err());
        assert!(NoiseModel::new(0.0, 1.5, 0).is_err());
        assert!(NoiseModel::new(1.0, 0.0, 0).is_ok());
        let psi = StateVector::zero_qubits(3);
        assert!(run_noisy(&ghz3(), &psi, &NoiseModel::default(), 0, 10).is_err());
    }

    #[test]
    fn noiseless_limit_matches_ideal_distribution() {
        let psi0 = StateVector::zero_qubits(3);
        let probs = run(&ghz3(), &psi0).unwrap().probabilities();
        let counts = run_noisy(&ghz3(), &psi0, &NoiseModel::noiseless(3), 200, 100).unwrap();
        assert_eq!(counts.total_shots(), 20_000);
        for (k, p) in probs.iter().enumerate() {
            let sigma = (p * (1.0 - p) / 20_000.0).sqrt();
            let f = counts.get(k as u64) as f64 / 20_000.0;
            assert!((f - p).abs() <= 5.0 * sigma + 1e-12, "outcome {k}: {f} vs {p}");
        }
        // outcomes outside the ideal support never appear
        let ideal = sample(&run(&ghz3(), &psi0).unwrap(), 1000, 1).unwrap();
        for (k, _) in counts.iter() {
            assert!(probs[k as usize] > 0.0 || ideal.get(k) > 0);
        }
    }

    #[test]
    fn fully_depolarized_x_is_uniform() {
        let c = Circuit::from_gates(1, [Gate::X { q: 0 }]).unwrap();
        let nm = NoiseModel::new(1.0, 0.0, 5).unwrap();
        let counts = run_noisy(&c, &StateVector::zero_qubits(1), &nm, 20_000, 1).unwrap();
        let ones = counts.get(1) as f64 / 20_000.0;
        // 5σ for a fair coin at 2·10⁴ draws
        assert!((ones - 0.5).abs() < 5.0 * (0.25f64 / 20_000.0).sqrt(), "{ones}");
    }

    #[test]
    fn deterministic_under_seed() {
        let psi0 = StateVector::zero_qubits(3);
        let nm = NoiseModel::new(0.05, 0.2, 42).unwrap();
        let a = run_noisy(&ghz3(), &psi0, &nm, 300, 5).unwrap();
        let b = run_noisy(&ghz3(), &psi0, &nm, 300, 5).unwrap();
        assert_eq!(a, b);
        let other = NoiseModel { seed: 43, ..nm };
        assert_ne!(a, run_noisy(&ghz3(), &psi0, &other, 300, 5).unwrap());
    }

    /// Checkpoint restarts give the same state as a from-scratch faulty run.
    #[test]
    fn checkpoint_replay_matches_direct_run() {
        let mut c = Circuit::new(4);
        for r in 0..40 {
            c.push(Gate::U3 { q: r % 4, theta: 0.1 * r as f64, phi: 0.2, lambda: -0.3 }).unwrap();
            c.push(Gate::Cz { a: r % 4, b: (r + 1) % 4 }).unwrap();
        }
        let psi0 = StateVector::zero_qubits(4);
        let cp = Checkpoints::new(&c, &psi0);
        assert!(cp.stride > 1);
        let faults = [Fault { after: 37, paulis: 0b0110 }, Fault { after: 60, paulis: 3 }];
        let got = cp.run_with_faults(&c, &faults);
        let mut amps = psi0.amps.clone();
        for (i, g) in c.gates().iter().enumerate() {
            kernels::apply_gate(&mut amps, g);
            for f in faults.iter().filter(|f| f.after == i) {
                let (a, b) = g.qubits();
                kernels::apply_pauli(&mut amps, a, f.paulis & 3);
                if let Some(b) = b {
                    kernels::apply_pauli(&mut amps, b, f.paulis >> 2);
                }
            }
        }
        assert!(crate::linalg::distance(&got, &amps) < 1e-13);
    }
}
