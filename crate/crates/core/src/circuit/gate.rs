use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

pub type Mat2 = [[C64; 2]; 2];
pub type Mat4 = [[C64; 4]; 4];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    /// cos(θ/2), −e^{iλ} sin(θ/2); e^{iφ} sin(θ/2), e^{i(φ+λ)} cos(θ/2)
    U3 { q: usize, theta: f64, phi: f64, lambda: f64 },
    /// exp(−i α Z / 2)
    Rz { q: usize, angle: f64 },
    X { q: usize },
    Cz { a: usize, b: usize },
    Cnot { control: usize, target: usize },
    /// exp(−i α Z⊗Z / 2)
    Rzz { a: usize, b: usize, angle: f64 },
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn u3_matrix(theta: f64, phi: f64, lambda: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    [
        [c(co, 0.0), -C64::from_polar(s, lambda)],
        [C64::from_polar(s, phi), C64::from_polar(co, phi + lambda)],
    ]
}

impl Gate {
    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::U3 { q, .. } | Gate::Rz { q, .. } | Gate::X { q } => (q, None),
            Gate::Cz { a, b } | Gate::Rzz { a, b, .. } => (a, Some(b)),
            Gate::Cnot { control, target } => (control, Some(target)),
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.qubits().1.is_some()
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::U3 { .. } => "U3",
            Gate::Rz { .. } => "RZ",
            Gate::X { .. } => "X",
            Gate::Cz { .. } => "CZ",
            Gate::Cnot { .. } => "CNOT",
            Gate::Rzz { .. } => "RZZ",
        }
    }

    pub fn dagger(&self) -> Gate {
        match *self {
            Gate::U3 { q, theta, phi, lambda } => Gate::U3 {
                q,
                theta: -theta,
                phi: -lambda,
                lambda: -phi,
            },
            Gate::Rz { q, angle } => Gate::Rz { q, angle: -angle },
            Gate::Rzz { a, b, angle } => Gate::Rzz { a, b, angle: -angle },
            g @ (Gate::X { .. } | Gate::Cz { .. } | Gate::Cnot { .. }) => g,
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let (a, b) = self.qubits();
        for q in std::iter::once(a).chain(b) {
            if q >= n_qubits {
                return Err(Error::QubitIndex { index: q, n_qubits });
            }
        }
        if Some(a) == b {
            return Err(Error::RepeatedQubit(a));
        }
        Ok(())
    }

    /// 2×2 matrix of a single-qubit gate.
    pub fn matrix1(&self) -> Option<Mat2> {
        let z = c(0.0, 0.0);
        match *self {
            Gate::U3 { theta, phi, lambda, .. } => Some(u3_matrix(theta, phi, lambda)),
            Gate::Rz { angle, .. } => Some([
                [C64::from_polar(1.0, -angle / 2.0), z],
                [z, C64::from_polar(1.0, angle / 2.0)],
            ]),
            Gate::X { .. } => Some([[z, c(1.0, 0.0)], [c(1.0, 0.0), z]]),
            _ => None,
        }
    }

    /// 4×4 matrix of a two-qubit gate in the basis |q_first q_second⟩, with
    /// q_first the more significant bit (index = 2·bit(first) + bit(second)).
    pub fn matrix2(&self) -> Option<Mat4> {
        let z = c(0.0, 0.0);
        let o = c(1.0, 0.0);
        match *self {
            Gate::Cz { .. } => Some([[o, z, z, z], [z, o, z, z], [z, z, o, z], [z, z, z, -o]]),
            Gate::Cnot { .. } => Some([[o, z, z, z], [z, o, z, z], [z, z, z, o], [z, z, o, z]]),
            Gate::Rzz { angle, .. } => {
                let m = C64::from_polar(1.0, -angle / 2.0);
                let p = C64::from_polar(1.0, angle / 2.0);
                Some([[m, z, z, z], [z, p, z, z], [z, z, p, z], [z, z, z, m]])
            }
            _ => None,
        }
    }
}

impl fmt::Display for Gate {
    /// `NAME q0 [q1] [angles…]`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::U3 { q, theta, phi, lambda } => write!(f, "U3 {q} {theta} {phi} {lambda}"),
            Gate::Rz { q, angle } => write!(f, "RZ {q} {angle}"),
            Gate::X { q } => write!(f, "X {q}"),
            Gate::Cz { a, b } => write!(f, "CZ {a} {b}"),
            Gate::Cnot { control, target } => write!(f, "CNOT {control} {target}"),
            Gate::Rzz { a, b, angle } => write!(f, "RZZ {a} {b} {angle}"),
        }
    }
}

impl FromStr for Gate {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let mut it = line.split_whitespace();
        let name = it.next().ok_or_else(|| Error::Param("empty gate line".into()))?;
        let rest: Vec<&str> = it.collect();
        let bad = || Error::Param(format!("malformed gate line: {line:?}"));
        let idx = |i: usize| -> Result<usize> { rest.get(i).ok_or_else(bad)?.parse().map_err(|_| bad()) };
        let ang = |i: usize| -> Result<f64> { rest.get(i).ok_or_else(bad)?.parse().map_err(|_| bad()) };
        let (gate, arity) = match name {
            "U3" => (
                Gate::U3 {
                    q: idx(0)?,
                    theta: ang(1)?,
                    phi: ang(2)?,
                    lambda: ang(3)?,
                },
                4,
            ),
            "RZ" => (Gate::Rz { q: idx(0)?, angle: ang(1)? }, 2),
            "X" => (Gate::X { q: idx(0)? }, 1),
            "CZ" => (Gate::Cz { a: idx(0)?, b: idx(1)? }, 2),
            "CNOT" => (
                Gate::Cnot {
                    control: idx(0)?,
                    target: idx(1)?,
                },
                2,
            ),
            "RZZ" => (
                Gate::Rzz {
                    a: idx(0)?,
                    b: idx(1)?,
                    angle: ang(2)?,
                },
                3,
            ),
            _ => return Err(Error::Param(format!("unknown gate {name:?}"))),
        };
        if rest.len() != arity {
            return Err(bad());
        }
        Ok(gate)
    }
}
