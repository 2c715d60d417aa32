//! In-place amplitude updates on a dense register (qubit k = bit k).

use super::gate::{u3_matrix, Gate, Mat2};
use crate::C64;

#[inline]
pub fn apply_1q(amps: &mut [C64], q: usize, m: &Mat2) {
    let stride = 1usize << q;
    let [[m00, m01], [m10, m11]] = *m;
    for chunk in amps.chunks_exact_mut(2 * stride) {
        let (lo, hi) = chunk.split_at_mut(stride);
        for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*a0, *a1);
            *a0 = m00 * x + m01 * y;
            *a1 = m10 * x + m11 * y;
        }
    }
}

pub fn apply_x(amps: &mut [C64], q: usize) {
    let stride = 1usize << q;
    for chunk in amps.chunks_exact_mut(2 * stride) {
        let (lo, hi) = chunk.split_at_mut(stride);
        lo.swap_with_slice(hi);
    }
}

pub fn apply_z(amps: &mut [C64], q: usize) {
    let stride = 1usize << q;
    for chunk in amps.chunks_exact_mut(2 * stride) {
        chunk[stride..].iter_mut().for_each(|a| *a = -*a);
    }
}

/// Y|0⟩ = i|1⟩, Y|1⟩ = −i|0⟩
pub fn apply_y(amps: &mut [C64], q: usize) {
    let stride = 1usize << q;
    let i = C64::new(0.0, 1.0);
    for chunk in amps.chunks_exact_mut(2 * stride) {
        let (lo, hi) = chunk.split_at_mut(stride);
        for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*a0, *a1);
            *a0 = -i * y;
            *a1 = i * x;
        }
    }
}

pub fn apply_rz(amps: &mut [C64], q: usize, angle: f64) {
    let m = C64::from_polar(1.0, -angle / 2.0);
    let p = C64::from_polar(1.0, angle / 2.0);
    let stride = 1usize << q;
    for chunk in amps.chunks_exact_mut(2 * stride) {
        let (lo, hi) = chunk.split_at_mut(stride);
        lo.iter_mut().for_each(|a| *a *= m);
        hi.iter_mut().for_each(|a| *a *= p);
    }
}

pub fn apply_cz(amps: &mut [C64], a: usize, b: usize) {
    let mask = (1usize << a) | (1usize << b);
    for (i, amp) in amps.iter_mut().enumerate() {
        if i & mask == mask {
            *amp = -*amp;
        }
    }
}

pub fn apply_cnot(amps: &mut [C64], control: usize, target: usize) {
    let cbit = 1usize << control;
    let tbit = 1usize << target;
    for i in 0..amps.len() {
        if i & cbit != 0 && i & tbit == 0 {
            amps.swap(i, i | tbit);
        }
    }
}

pub fn apply_rzz(amps: &mut [C64], a: usize, b: usize, angle: f64) {
    let even = C64::from_polar(1.0, -angle / 2.0);
    let odd = C64::from_polar(1.0, angle / 2.0);
    for (i, amp) in amps.iter_mut().enumerate() {
        if ((i >> a) ^ (i >> b)) & 1 == 0 {
            *amp *= even;
        } else {
            *amp *= odd;
        }
    }
}

/// Applies a validated gate.
pub fn apply_gate(amps: &mut [C64], g: &Gate) {
    match *g {
        Gate::U3 { q, theta, phi, lambda } => apply_1q(amps, q, &u3_matrix(theta, phi, lambda)),
        Gate::Rz { q, angle } => apply_rz(amps, q, angle),
        Gate::X { q } => apply_x(amps, q),
        Gate::Cz { a, b } => apply_cz(amps, a, b),
        Gate::Cnot { control, target } => apply_cnot(amps, control, target),
        Gate::Rzz { a, b, angle } => apply_rzz(amps, a, b, angle),
    }
}

/// Pauli `p` (0 = I, 1 = X, 2 = Y, 3 = Z) on qubit `q`.
pub fn apply_pauli(amps: &mut [C64], q: usize, p: u8) {
    match p {
        0 => {}
        1 => apply_x(amps, q),
        2 => apply_y(amps, q),
        3 => apply_z(amps, q),
        _ => unreachable!("pauli index {p}"),
    }
}
