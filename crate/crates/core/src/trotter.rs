//! First-order Trotter circuits for the qubit Hamiltonian.
//!
//! One step applies, in order: bond blocks on even bonds of both chains,
//! bond blocks on odd bonds, the on-site RZZ rungs, and the single-qubit Z
//! rotations.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::exact::InitialConfig;
use crate::model::{ModelParams, Spin};
use crate::{Error, Result, StateVector};

/// Sub-layers of one Trotter step, in application order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layer {
    /// exp(−i dt h_b) on bonds (0,1), (2,3), … of both chains.
    BondsEven,
    /// Same on bonds (1,2), (3,4), …
    BondsOdd,
    /// exp(−i dt U/4 Z_j Z_{L+j}).
    Rungs,
    /// exp(−i dt c_j Z_j) from the single-Z part.
    Fields,
}

pub const LAYER_ORDER: [Layer; 4] = [Layer::BondsEven, Layer::BondsOdd, Layer::Rungs, Layer::Fields];

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub layer: Layer,
    pub gates: Vec<Gate>,
}

/// exp(−i dt [J/2 (XX + YY) + V/4 ZZ]) on qubits `a`, `b` with three CNOTs.
pub fn bond_gate(a: usize, b: usize, j: f64, v: f64, dt: f64) -> Vec<Gate> {
    // exp(i(αXX + βYY + γZZ)) with α = β = −J dt/2, γ = −V dt/4
    let alpha = -j * dt / 2.0;
    let gamma = -v * dt / 4.0;
    let ry = |q, theta| Gate::U3 { q, theta, phi: 0.0, lambda: 0.0 };
    vec![
        Gate::Rz { q: b, angle: -FRAC_PI_2 },
        Gate::Cnot { control: b, target: a },
        Gate::Rz { q: a, angle: FRAC_PI_2 - 2.0 * gamma },
        ry(b, 2.0 * alpha - FRAC_PI_2),
        Gate::Cnot { control: a, target: b },
        ry(b, FRAC_PI_2 - 2.0 * alpha),
        Gate::Cnot { control: b, target: a },
        Gate::Rz { q: a, angle: FRAC_PI_2 },
    ]
}

fn check_supported(params: &ModelParams) -> Result<()> {
    params.validate()?;
    if params.v_updn != 0.0 {
        return Err(Error::Param(
            "Trotter circuits cover same-spin interactions only (v_updn must be 0)".into(),
        ));
    }
    Ok(())
}

/// The gate blocks of one step; identity blocks (zero angles) are left out.
pub fn step_blocks(params: &ModelParams, dt: f64) -> Result<Vec<Block>> {
    check_supported(params)?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Param(format!("dt must be positive, got {dt}")));
    }
    let l = params.l;
    let mut blocks = Vec::new();
    for (layer, parity) in [(Layer::BondsEven, 0), (Layer::BondsOdd, 1)] {
        for spin in Spin::BOTH {
            let off = if spin == Spin::Up { 0 } else { l };
            let (j, v) = (params.hopping(spin), params.same_spin_nn(spin));
            if j == 0.0 && v == 0.0 {
                continue;
            }
            for site in (parity..l.saturating_sub(1)).step_by(2) {
                blocks.push(Block {
                    layer,
                    gates: bond_gate(off + site, off + site + 1, j, v, dt),
                });
            }
        }
    }
    if params.u != 0.0 {
        for site in 0..l {
            blocks.push(Block {
                layer: Layer::Rungs,
                gates: vec![Gate::Rzz {
                    a: site,
                    b: l + site,
                    angle: params.u * dt / 2.0,
                }],
            });
        }
    }
    for spin in Spin::BOTH {
        let off = if spin == Spin::Up { 0 } else { l };
        let v = params.same_spin_nn(spin);
        for site in 0..l {
            // single-Z coefficient: −V/4 per adjacent bond
            let bonds = usize::from(site > 0) + usize::from(site + 1 < l);
            let c = -v / 4.0 * bonds as f64;
            if c != 0.0 {
                blocks.push(Block {
                    layer: Layer::Fields,
                    gates: vec![Gate::Rz {
                        q: off + site,
                        angle: 2.0 * dt * c,
                    }],
                });
            }
        }
    }
    Ok(blocks)
}

pub fn build_step(params: &ModelParams, dt: f64) -> Result<Circuit> {
    Circuit::from_gates(
        2 * params.l,
        step_blocks(params, dt)?.into_iter().flat_map(|b| b.gates),
    )
}

/// Evolution time split into equal steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrotterPlan {
    pub params: ModelParams,
    pub initial: InitialConfig,
    pub dt: f64,
    pub n_steps: usize,
    pub layer_order: Vec<Layer>,
}

impl TrotterPlan {
    pub const DEFAULT_DT: f64 = 0.1;

    /// Steps of length `dt` covering `t`. When `t` is not a whole number of
    /// steps, the count is rounded up and `dt` shrunk to t/n.
    pub fn new(params: ModelParams, initial: InitialConfig, t: f64, dt: f64) -> Result<Self> {
        check_supported(&params)?;
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::Param(format!("evolution time must be non-negative, got {t}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Param(format!("dt must be positive, got {dt}")));
        }
        let n = (t / dt).round();
        let (n_steps, dt) = if (n * dt - t).abs() <= 1e-12 {
            (n as usize, dt)
        } else {
            let n = (t / dt).ceil();
            (n as usize, t / n)
        };
        Ok(TrotterPlan {
            params,
            initial,
            dt,
            n_steps,
            layer_order: LAYER_ORDER.to_vec(),
        })
    }

    pub fn time(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.params.l
    }

    /// X gates taking the vacuum to the initial configuration.
    pub fn preparation(&self) -> Result<Vec<Gate>> {
        let s = self.initial.fock_state(&self.params)?;
        let idx = s.qubit_index(self.params.l);
        Ok((0..self.n_qubits())
            .filter(|&q| idx >> q & 1 == 1)
            .map(|q| Gate::X { q })
            .collect())
    }

    /// The initial configuration as a computational basis state.
    pub fn initial_state(&self) -> Result<StateVector> {
        let s = self.initial.fock_state(&self.params)?;
        Ok(StateVector::qubit_basis_state(
            self.n_qubits(),
            s.qubit_index(self.params.l) as usize,
        ))
    }
}

/// Optional preparation layer followed by `n_steps` copies of the step.
pub fn build_circuit(plan: &TrotterPlan, with_init: bool) -> Result<Circuit> {
    let mut c = Circuit::new(plan.n_qubits());
    if with_init {
        for g in plan.preparation()? {
            c.push(g)?;
        }
    }
    if plan.n_steps > 0 {
        let step = build_step(&plan.params, plan.dt)?;
        for _ in 0..plan.n_steps {
            c.append(&step)?;
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expm_hermitian, phase_aligned_operator_distance};
    use crate::model::{Pauli, PauliString, PauliSum};
    use nalgebra::DMatrix;
    use std::f64::consts::PI;

    fn bond_oracle(j: f64, v: f64, dt: f64) -> DMatrix<crate::C64> {
        let mut h = PauliSum::new(2);
        h.push(j / 2.0, PauliString::pair(0, Pauli::X, 1, Pauli::X));
        h.push(j / 2.0, PauliString::pair(0, Pauli::Y, 1, Pauli::Y));
        h.push(v / 4.0, PauliString::pair(0, Pauli::Z, 1, Pauli::Z));
        if h.is_empty() {
            return DMatrix::identity(4, 4);
        }
        expm_hermitian(&h.to_dense(), dt)
    }

    fn bond_unitary(a: usize, b: usize, j: f64, v: f64, dt: f64) -> DMatrix<crate::C64> {
        Circuit::from_gates(2, bond_gate(a, b, j, v, dt)).unwrap().unitary().unwrap()
    }

    #[test]
    fn bond_gate_identity_at_zero_couplings() {
        let d = phase_aligned_operator_distance(&bond_unitary(0, 1, 0.0, 0.0, 0.1), &DMatrix::identity(4, 4));
        assert!(d < 1e-12, "{d:e}");
    }

    #[test]
    fn bond_gate_matches_exponential() {
        for (j, v, dt) in [(1.0, 10.0, 0.1), (0.2, 10.0, 0.1), (1.0, 0.0, 0.37), (0.0, 3.0, 0.25), (2.0, -1.5, 0.8)] {
            for (a, b) in [(0, 1), (1, 0)] {
                let d = phase_aligned_operator_distance(&bond_unitary(a, b, j, v, dt), &bond_oracle(j, v, dt));
                assert!(d < 1e-10, "J={j} V={v} dt={dt}: {d:e}");
            }
        }
        assert_eq!(bond_gate(0, 1, 1.0, 1.0, 0.1).iter().filter(|g| g.is_two_qubit()).count(), 3);
    }

    #[test]
    fn bond_gate_swaps_single_excitation_at_half_pi() {
        let u = bond_unitary(0, 1, 1.0, 0.0, PI / 2.0);
        for (from, to) in [(0b01, 0b10), (0b10, 0b01)] {
            assert!((u[(to, from)].norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn block_counts_at_l7() {
        let p = ModelParams::new(7, 0.2, 10.0, 10.0).unwrap();
        let blocks = step_blocks(&p, 0.1).unwrap();
        let count = |layer| blocks.iter().filter(|b| b.layer == layer).count();
        assert_eq!(count(Layer::BondsEven) + count(Layer::BondsOdd), 12);
        assert_eq!(count(Layer::BondsEven), 6);
        assert_eq!(count(Layer::Rungs), 7);
        assert_eq!(count(Layer::Fields), 14);
        let step = build_step(&p, 0.1).unwrap();
        assert_eq!(step.count_named("CNOT"), 36);
        assert_eq!(step.count_named("RZZ"), 7);
        let order: Vec<Layer> = blocks.iter().map(|b| b.layer).collect();
        let mut sorted = order.clone();
        sorted.sort_by_key(|l| LAYER_ORDER.iter().position(|x| x == l));
        assert_eq!(order, sorted);
    }

    #[test]
    fn no_rungs_without_u() {
        let p = ModelParams::new(7, 0.2, 0.0, 10.0).unwrap();
        let blocks = step_blocks(&p, 0.1).unwrap();
        assert!(blocks.iter().all(|b| b.layer != Layer::Rungs));
        assert_eq!(build_step(&p, 0.1).unwrap().count_named("RZZ"), 0);
    }

    #[test]
    fn plan_step_counts() {
        let p = ModelParams::new(7, 0.2, 10.0, 10.0).unwrap();
        let plan = TrotterPlan::new(p.clone(), InitialConfig::Walk, 1.6, 0.1).unwrap();
        assert_eq!(plan.n_steps, 16);
        assert!((plan.time() - 1.6).abs() < 1e-12);
        let odd = TrotterPlan::new(p.clone(), InitialConfig::Walk, 1.05, 0.1).unwrap();
        assert_eq!(odd.n_steps, 11);
        assert!((odd.time() - 1.05).abs() < 1e-12);
        let zero = TrotterPlan::new(p, InitialConfig::Walk, 0.0, 0.1).unwrap();
        assert_eq!(zero.n_steps, 0);
        let c = build_circuit(&zero, true).unwrap();
        assert_eq!(c.len(), 3);
        assert!(c.gates().iter().all(|g| g.name() == "X"));
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut p = ModelParams::new(5, 1.0, 1.0, 1.0).unwrap();
        assert!(step_blocks(&p, 0.0).is_err());
        assert!(TrotterPlan::new(p.clone(), InitialConfig::Walk, -1.0, 0.1).is_err());
        p.v_updn = 1.0;
        assert!(build_step(&p, 0.1).is_err());
    }
}
