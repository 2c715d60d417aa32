use nalgebra::DMatrix;

use crate::linalg;
use crate::model::SparseHamiltonian;
use crate::{Error, Result, StateVector, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Full eigendecomposition; practical up to a few thousand states.
    Dense,
    /// Short-step Lanczos exponentials.
    Krylov,
}

/// e^{−iHt} ψ₀.
pub fn evolve(h: &SparseHamiltonian, psi0: &StateVector, t: f64, method: Method) -> Result<StateVector> {
    check_dims(h, psi0)?;
    match method {
        Method::Dense => DensePropagator::new(h)?.propagate(psi0, t),
        Method::Krylov => KrylovPropagator::new(h, KrylovOptions::default()).propagate(psi0, t),
    }
}

fn check_dims(h: &SparseHamiltonian, psi: &StateVector) -> Result<()> {
    if h.dim() != psi.dim() {
        return Err(Error::Dimension {
            expected: h.dim(),
            got: psi.dim(),
        });
    }
    Ok(())
}

/// Eigendecomposition of H, reusable for any number of evolution times.
#[derive(Debug, Clone)]
pub struct DensePropagator {
    energies: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl DensePropagator {
    pub const MAX_DIM: usize = 4096;

    pub fn new(h: &SparseHamiltonian) -> Result<Self> {
        if h.dim() > Self::MAX_DIM {
            return Err(Error::Param(format!(
                "dense evolution limited to dimension {}, got {}",
                Self::MAX_DIM,
                h.dim()
            )));
        }
        let (energies, vectors) = linalg::eigh(h.to_dense());
        Ok(DensePropagator { energies, vectors })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn propagate(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        let n = self.energies.len();
        if psi.dim() != n {
            return Err(Error::Dimension { expected: n, got: psi.dim() });
        }
        if t == 0.0 {
            return Ok(psi.clone());
        }
        let mut coeffs = vec![C64::new(0.0, 0.0); n];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let col = self.vectors.column(k);
            let proj: C64 = col.iter().zip(&psi.amps).map(|(v, a)| a * *v).sum();
            *c = proj * C64::from_polar(1.0, -self.energies[k] * t);
        }
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (k, c) in coeffs.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(self.vectors.column(k).iter()) {
                *o += c * *v;
            }
        }
        Ok(StateVector {
            amps: out,
            basis: psi.basis,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptions {
    /// Outer step length in units of 1/J↑.
    pub step: f64,
    /// Bound on the a-posteriori error estimate of one step.
    pub tol: f64,
    /// Largest Krylov subspace tried before giving up on a step.
    pub max_dim: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            step: 0.05,
            tol: 1e-12,
            max_dim: 64,
        }
    }
}

/// Lanczos propagator with per-step adaptive subspace size.
pub struct KrylovPropagator<'a> {
    h: &'a SparseHamiltonian,
    opts: KrylovOptions,
    basis: Vec<Vec<C64>>,
    work: Vec<C64>,
    steps_taken: usize,
}

impl<'a> KrylovPropagator<'a> {
    pub fn new(h: &'a SparseHamiltonian, opts: KrylovOptions) -> Self {
        KrylovPropagator {
            h,
            opts,
            basis: Vec::new(),
            work: vec![C64::new(0.0, 0.0); h.dim()],
            steps_taken: 0,
        }
    }

    pub fn propagate(&mut self, psi: &StateVector, t: f64) -> Result<StateVector> {
        check_dims(self.h, psi)?;
        let mut out = psi.clone();
        self.propagate_in_place(&mut out.amps, t)?;
        Ok(out)
    }

    pub fn propagate_in_place(&mut self, amps: &mut [C64], t: f64) -> Result<()> {
        if t == 0.0 {
            return Ok(());
        }
        if !t.is_finite() {
            return Err(Error::Param(format!("evolution time must be finite, got {t}")));
        }
        let n = (t.abs() / self.opts.step).ceil().max(1.0) as usize;
        let dt = t / n as f64;
        for _ in 0..n {
            self.step(amps, dt)?;
        }
        Ok(())
    }

    fn step(&mut self, amps: &mut [C64], dt: f64) -> Result<()> {
        let dim = self.h.dim();
        let beta0 = linalg::norm(amps);
        self.steps_taken += 1;
        if beta0 == 0.0 {
            return Ok(());
        }
        let max_dim = self.opts.max_dim.min(dim).max(1);
        let mut alpha: Vec<f64> = Vec::with_capacity(max_dim);
        let mut beta: Vec<f64> = Vec::with_capacity(max_dim);
        if self.basis.is_empty() {
            self.basis.push(vec![C64::new(0.0, 0.0); dim]);
        }
        for (v, a) in self.basis[0].iter_mut().zip(amps.iter()) {
            *v = a / beta0;
        }

        let mut coeffs: Vec<C64> = vec![C64::new(1.0, 0.0)];
        let mut residual = f64::INFINITY;
        let mut used = 0;
        for j in 0..max_dim {
            self.h.matvec(&self.basis[j], &mut self.work);
            let a = linalg::inner(&self.basis[j], &self.work).re;
            for (w, v) in self.work.iter_mut().zip(&self.basis[j]) {
                *w -= v * a;
            }
            if j > 0 {
                let b = beta[j - 1];
                for (w, v) in self.work.iter_mut().zip(&self.basis[j - 1]) {
                    *w -= v * b;
                }
            }
            // second pass against the two previous vectors; enough at these short steps
            for k in j.saturating_sub(1)..=j {
                let c = linalg::inner(&self.basis[k], &self.work);
                for (w, v) in self.work.iter_mut().zip(&self.basis[k]) {
                    *w -= v * c;
                }
            }
            alpha.push(a);
            let b = linalg::norm(&self.work);
            coeffs = tridiagonal_exp(&alpha, &beta, dt);
            residual = b * coeffs[j].norm();
            used = j + 1;
            if residual < self.opts.tol || b < 1e-14 || used == dim {
                break;
            }
            beta.push(b);
            if self.basis.len() <= j + 1 {
                self.basis.push(vec![C64::new(0.0, 0.0); dim]);
            }
            let inv = 1.0 / b;
            for (v, w) in self.basis[j + 1].iter_mut().zip(&self.work) {
                *v = w * inv;
            }
        }
        if !(residual < self.opts.tol) && used < dim {
            return Err(Error::KrylovNoConvergence {
                step: self.steps_taken,
                residual,
                dim: used,
            });
        }
        amps.iter_mut().for_each(|a| *a = C64::new(0.0, 0.0));
        for (k, c) in coeffs.iter().enumerate().take(used) {
            let scale = c * beta0;
            for (a, v) in amps.iter_mut().zip(&self.basis[k]) {
                *a += v * scale;
            }
        }
        Ok(())
    }
}

/// exp(−i dt T) e₁ for the symmetric tridiagonal T(alpha, beta).
fn tridiagonal_exp(alpha: &[f64], beta: &[f64], dt: f64) -> Vec<C64> {
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let (values, vectors) = linalg::eigh(t);
    (0..m)
        .map(|r| {
            (0..m)
                .map(|k| {
                    let v = vectors[(r, k)] * vectors[(0, k)];
                    C64::from_polar(v, -dt * values[k])
                })
                .sum()
        })
        .collect()
}
