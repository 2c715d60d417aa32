//! Fixed-depth U3 + CZ ansatz fitted to a target state by maximizing
//! F(θ) = |⟨target| A(θ) |ψ₀⟩|².
//!
//! Gradients are exact, computed by one reverse sweep over the circuit
//! (adjoint differentiation) rather than by parameter shifts; they are
//! checked against central finite differences in the tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{u3_matrix, Circuit, Gate, Mat2};
use crate::linalg;
use crate::{Error, Result, StateVector, C64};

/// Which qubit pairs each CZ layer couples. Qubits 0…L−1 form the ↑ chain,
/// L…2L−1 the ↓ chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Entangler {
    /// Rounds alternate between a chain layer and a rung layer (j, L+j);
    /// successive chain layers alternate even and odd bonds.
    ChainRung,
    /// Every round is a chain layer, alternating even and odd bonds; a rung
    /// layer replaces every third round.
    ChainHeavy,
    /// ChainHeavy, with rungs added on sites a chain layer leaves idle.
    ChainHeavyFill,
}

impl Entangler {
    pub fn layer(&self, l: usize, round: usize) -> Vec<(usize, usize)> {
        let (chain, parity) = match self {
            Entangler::ChainRung => (round % 2 == 0, (round / 2) % 2),
            Entangler::ChainHeavy | Entangler::ChainHeavyFill => (round % 3 != 2, (round - round / 3) % 2),
        };
        if !chain {
            return (0..l).map(|j| (j, l + j)).collect();
        }
        let mut pairs = Vec::new();
        for off in [0, l] {
            for j in (parity..l.saturating_sub(1)).step_by(2) {
                pairs.push((off + j, off + j + 1));
            }
        }
        if *self == Entangler::ChainHeavyFill {
            for j in 0..l {
                if (j < parity || j >= parity + 2 * ((l - parity) / 2)) && !pairs.iter().any(|&(a, b)| a == j || b == j) {
                    pairs.push((j, l + j));
                }
            }
        }
        pairs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ansatz {
    /// Sites per chain; the register has 2L qubits.
    pub l: usize,
    pub n_rounds: usize,
    pub entangler: Entangler,
}

impl Ansatz {
    pub fn new(l: usize, n_rounds: usize, entangler: Entangler) -> Result<Self> {
        if l == 0 || 2 * l > crate::circuit::MAX_QUBITS {
            return Err(Error::Param(format!("unsupported chain length {l}")));
        }
        Ok(Ansatz { l, n_rounds, entangler })
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.l
    }

    pub fn n_params(&self) -> usize {
        3 * self.n_qubits() * (self.n_rounds + 1)
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(Error::Dimension {
                expected: self.n_params(),
                got: theta.len(),
            });
        }
        Ok(())
    }

    /// U3 layer, then (CZ layer, U3 layer) per round. Parameters are
    /// (θ, φ, λ) per qubit, layer by layer.
    pub fn circuit(&self, theta: &[f64]) -> Result<Circuit> {
        self.check_theta(theta)?;
        let n = self.n_qubits();
        let mut c = Circuit::new(n);
        let mut p = theta.chunks_exact(3);
        for round in 0..=self.n_rounds {
            if round > 0 {
                for (a, b) in self.entangler.layer(self.l, round - 1) {
                    c.push(Gate::Cz { a, b })?;
                }
            }
            for q in 0..n {
                let t = p.next().expect("parameter count checked");
                c.push(Gate::U3 {
                    q,
                    theta: t[0],
                    phi: t[1],
                    lambda: t[2],
                })?;
            }
        }
        Ok(c)
    }
}

/// Precomputed ansatz program: CZ layers become ±1 sign tables.
struct Program {
    n_qubits: usize,
    n_rounds: usize,
    signs: Vec<Vec<bool>>,
}

impl Program {
    fn new(ansatz: &Ansatz) -> Self {
        let n = ansatz.n_qubits();
        let signs = (0..ansatz.n_rounds)
            .map(|r| {
                let pairs = ansatz.entangler.layer(ansatz.l, r);
                (0..1usize << n)
                    .map(|i| pairs.iter().filter(|&&(a, b)| i >> a & 1 == 1 && i >> b & 1 == 1).count() % 2 == 1)
                    .collect()
            })
            .collect();
        Program {
            n_qubits: n,
            n_rounds: ansatz.n_rounds,
            signs,
        }
    }

    fn forward(&self, theta: &[f64], psi: &mut [C64]) {
        let n = self.n_qubits;
        for round in 0..=self.n_rounds {
            if round > 0 {
                flip(psi, &self.signs[round - 1]);
            }
            for q in 0..n {
                let t = &theta[3 * (round * n + q)..][..3];
                crate::circuit::kernels::apply_1q(psi, q, &u3_matrix(t[0], t[1], t[2]));
            }
        }
    }

    /// Overlap ⟨target|A(θ)ψ₀⟩ and its gradient with respect to θ.
    fn overlap_and_gradient(&self, theta: &[f64], psi0: &[C64], target: &[C64], phi: &mut Vec<C64>, chi: &mut Vec<C64>) -> (C64, Vec<C64>) {
        let n = self.n_qubits;
        phi.clear();
        phi.extend_from_slice(psi0);
        self.forward(theta, phi);
        let overlap = linalg::inner(target, phi);
        chi.clear();
        chi.extend_from_slice(target);
        let mut grad = vec![C64::new(0.0, 0.0); theta.len()];
        for round in (0..=self.n_rounds).rev() {
            for q in (0..n).rev() {
                let k = 3 * (round * n + q);
                let t = &theta[k..k + 3];
                let g = u3_matrix(t[0], t[1], t[2]);
                let s = unwind_1q(phi, chi, q, &dagger(&g));
                let d = u3_derivatives(t[0], t[1], t[2]);
                for (slot, dm) in grad[k..k + 3].iter_mut().zip(&d) {
                    *slot = dm[0][0] * s[0][0] + dm[0][1] * s[0][1] + dm[1][0] * s[1][0] + dm[1][1] * s[1][1];
                }
            }
            if round > 0 {
                let sg = &self.signs[round - 1];
                flip(phi, sg);
                flip(chi, sg);
            }
        }
        (overlap, grad)
    }
}

fn flip(psi: &mut [C64], signs: &[bool]) {
    for (a, &s) in psi.iter_mut().zip(signs) {
        if s {
            *a = -*a;
        }
    }
}

fn dagger(m: &Mat2) -> Mat2 {
    [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]]
}

/// Steps φ back through a gate G (φ ← G†φ), accumulates the reduced matrix
/// S_ab = Σ conj(χ_a) φ_b over the other qubits, then steps χ back.
fn unwind_1q(phi: &mut [C64], chi: &mut [C64], q: usize, gd: &Mat2) -> Mat2 {
    let stride = 1usize << q;
    let zero = C64::new(0.0, 0.0);
    let mut s = [[zero; 2]; 2];
    let [[m00, m01], [m10, m11]] = *gd;
    for (pc, cc) in phi.chunks_exact_mut(2 * stride).zip(chi.chunks_exact_mut(2 * stride)) {
        let (p0, p1) = pc.split_at_mut(stride);
        let (c0, c1) = cc.split_at_mut(stride);
        for i in 0..stride {
            let (x, y) = (p0[i], p1[i]);
            let (a, b) = (m00 * x + m01 * y, m10 * x + m11 * y);
            p0[i] = a;
            p1[i] = b;
            let (u, v) = (c0[i].conj(), c1[i].conj());
            s[0][0] += u * a;
            s[0][1] += u * b;
            s[1][0] += v * a;
            s[1][1] += v * b;
            let (cu, cv) = (c0[i], c1[i]);
            c0[i] = m00 * cu + m01 * cv;
            c1[i] = m10 * cu + m11 * cv;
        }
    }
    s
}

/// ∂U3/∂θ, ∂U3/∂φ, ∂U3/∂λ.
fn u3_derivatives(theta: f64, phi: f64, lambda: f64) -> [Mat2; 3] {
    let (s, c) = (theta / 2.0).sin_cos();
    let z = C64::new(0.0, 0.0);
    let i = C64::i();
    let el = C64::from_polar(1.0, lambda);
    let ep = C64::from_polar(1.0, phi);
    let epl = C64::from_polar(1.0, phi + lambda);
    [
        [[C64::new(-s / 2.0, 0.0), -el * (c / 2.0)], [ep * (c / 2.0), -epl * (s / 2.0)]],
        [[z, z], [i * ep * s, i * epl * c]],
        [[z, -i * el * s], [z, i * epl * c]],
    ]
}

fn check_inputs(ansatz: &Ansatz, theta: &[f64], target: &StateVector, psi0: &StateVector) -> Result<()> {
    ansatz.check_theta(theta)?;
    let dim = 1usize << ansatz.n_qubits();
    for s in [target, psi0] {
        if s.dim() != dim {
            return Err(Error::Dimension { expected: dim, got: s.dim() });
        }
    }
    Ok(())
}

/// |⟨target| A(θ) ψ₀⟩|².
pub fn fidelity(ansatz: &Ansatz, theta: &[f64], target: &StateVector, psi0: &StateVector) -> Result<f64> {
    check_inputs(ansatz, theta, target, psi0)?;
    let mut psi = psi0.amps.clone();
    Program::new(ansatz).forward(theta, &mut psi);
    Ok(linalg::inner(&target.amps, &psi).norm_sqr())
}

/// F(θ) and ∇F(θ).
pub fn fidelity_gradient(ansatz: &Ansatz, theta: &[f64], target: &StateVector, psi0: &StateVector) -> Result<(f64, Vec<f64>)> {
    check_inputs(ansatz, theta, target, psi0)?;
    let prog = Program::new(ansatz);
    let (mut phi, mut chi) = (Vec::new(), Vec::new());
    Ok(fidelity_and_grad(&prog, theta, &psi0.amps, &target.amps, &mut phi, &mut chi))
}

fn fidelity_and_grad(prog: &Program, theta: &[f64], psi0: &[C64], target: &[C64], phi: &mut Vec<C64>, chi: &mut Vec<C64>) -> (f64, Vec<f64>) {
    let (o, dov) = prog.overlap_and_gradient(theta, psi0, target, phi, chi);
    let grad = dov.iter().map(|d| 2.0 * (o.conj() * d).re).collect();
    (o.norm_sqr(), grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    /// Limited-memory BFGS with a backtracking line search.
    Lbfgs,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeOptions {
    pub optimizer: Optimizer,
    /// Fidelity-and-gradient evaluations per start.
    pub budget: usize,
    /// Random starts in addition to the identity (or warm) start.
    pub restarts: usize,
    /// Adam step size; ignored by L-BFGS.
    pub learning_rate: f64,
    /// Random starts draw every angle uniformly from [−init_spread, init_spread].
    pub init_spread: f64,
    /// A start stops once it reaches this fidelity.
    pub target_fidelity: f64,
    /// A start stops when its best fidelity improves by less than this over
    /// `patience` iterations.
    pub min_improvement: f64,
    pub patience: usize,
    pub seed: u64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            optimizer: Optimizer::Lbfgs,
            budget: 2000,
            restarts: 3,
            learning_rate: 0.02,
            init_spread: 0.5,
            target_fidelity: 0.9999,
            min_improvement: 1e-6,
            patience: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartReport {
    /// "identity", "warm" or "random-k".
    pub label: String,
    pub fidelity: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecompileResult {
    pub ansatz: Ansatz,
    pub theta: Vec<f64>,
    pub fidelity: f64,
    /// Iterations summed over all starts.
    pub iterations: usize,
    /// Evolution time of the target state (set by the caller; 0 otherwise).
    pub t: f64,
    pub starts: Vec<StartReport>,
    /// Best-so-far fidelity of the winning start, one entry per iteration.
    pub history: Vec<f64>,
    /// Caller-supplied digest of the configuration that produced the target.
    pub config_hash: Option<String>,
}

impl RecompileResult {
    pub fn circuit(&self) -> Result<Circuit> {
        self.ansatz.circuit(&self.theta)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Param(format!("serialize recompile result: {e}")))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: RecompileResult =
            serde_json::from_str(s).map_err(|e| Error::Param(format!("parse recompile result: {e}")))?;
        r.ansatz.check_theta(&r.theta)?;
        Ok(r)
    }
}

struct StartOutcome {
    label: String,
    theta: Vec<f64>,
    fidelity: f64,
    iterations: usize,
    history: Vec<f64>,
}

/// Best-so-far bookkeeping shared by both optimizers; one `record` per
/// fidelity evaluation.
struct Tracker<'a> {
    opts: &'a OptimizeOptions,
    best: f64,
    best_theta: Vec<f64>,
    history: Vec<f64>,
}

impl<'a> Tracker<'a> {
    fn new(opts: &'a OptimizeOptions, theta: &[f64]) -> Self {
        Tracker {
            opts,
            best: f64::NEG_INFINITY,
            best_theta: theta.to_vec(),
            history: Vec::new(),
        }
    }

    /// Returns true once the start should stop.
    fn record(&mut self, f: f64, theta: &[f64]) -> bool {
        if f > self.best {
            self.best = f;
            self.best_theta.copy_from_slice(theta);
        }
        self.history.push(self.best);
        let it = self.history.len();
        let o = self.opts;
        it >= o.budget
            || self.best >= o.target_fidelity
            || (it > o.patience && self.best - self.history[it - 1 - o.patience] < o.min_improvement)
    }

    fn finish(self, label: String) -> StartOutcome {
        StartOutcome {
            label,
            theta: self.best_theta,
            fidelity: self.best,
            iterations: self.history.len(),
            history: self.history,
        }
    }
}

fn adam(prog: &Program, mut theta: Vec<f64>, psi0: &[C64], target: &[C64], opts: &OptimizeOptions, label: String) -> StartOutcome {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-12;
    let np = theta.len();
    let (mut m, mut v) = (vec![0.0; np], vec![0.0; np]);
    let (mut phi, mut chi) = (Vec::new(), Vec::new());
    let mut tr = Tracker::new(opts, &theta);
    for it in 1.. {
        let (f, g) = fidelity_and_grad(prog, &theta, psi0, target, &mut phi, &mut chi);
        if tr.record(f, &theta) {
            break;
        }
        let (c1, c2) = (1.0 - B1.powi(it), 1.0 - B2.powi(it));
        for k in 0..np {
            m[k] = B1 * m[k] + (1.0 - B1) * g[k];
            v[k] = B2 * v[k] + (1.0 - B2) * g[k] * g[k];
            // ascent
            theta[k] += opts.learning_rate * (m[k] / c1) / ((v[k] / c2).sqrt() + EPS);
        }
    }
    tr.finish(label)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// L-BFGS descent on 1 − F with Armijo backtracking.
fn lbfgs(prog: &Program, mut x: Vec<f64>, psi0: &[C64], target: &[C64], opts: &OptimizeOptions, label: String) -> StartOutcome {
    const MEMORY: usize = 20;
    const ARMIJO: f64 = 1e-4;
    let (mut phi, mut chi) = (Vec::new(), Vec::new());
    let mut tr = Tracker::new(opts, &x);
    let mut eval = |x: &[f64], tr: &mut Tracker| {
        let (f, g) = fidelity_and_grad(prog, x, psi0, target, &mut phi, &mut chi);
        let stop = tr.record(f, x);
        (1.0 - f, g.into_iter().map(|v| -v).collect::<Vec<f64>>(), stop)
    };
    let (mut f, mut g, stop) = eval(&x, &mut tr);
    if stop {
        return tr.finish(label);
    }
    let mut pairs: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)> = Default::default();
    'outer: loop {
        let gnorm = dot(&g, &g).sqrt();
        if gnorm < 1e-12 {
            break;
        }
        // two-loop recursion
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let a = rho * dot(s, &d);
            d.iter_mut().zip(y).for_each(|(di, yi)| *di -= a * yi);
            alphas.push(a);
        }
        if let Some((s, y, _)) = pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            d.iter_mut().for_each(|di| *di *= gamma);
        }
        for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &d);
            d.iter_mut().zip(s).for_each(|(di, si)| *di += (a - b) * si);
        }
        let mut slope = dot(&d, &g);
        if slope >= 0.0 {
            pairs.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
        }
        let mut step = if pairs.is_empty() { (0.1 / gnorm).min(1.0) } else { 1.0 };
        let (xn, fnew, gn) = loop {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            let (fnew, gn, stop) = eval(&xn, &mut tr);
            if stop {
                break 'outer;
            }
            if fnew <= f + ARMIJO * step * slope {
                break (xn, fnew, gn);
            }
            step *= 0.5;
            if step * gnorm < 1e-14 {
                break 'outer;
            }
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 {
            if pairs.len() == MEMORY {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        (x, f, g) = (xn, fnew, gn);
    }
    tr.finish(label)
}

/// Multi-start maximization of F(θ): one start at `init` (all-zero angles,
/// i.e. the identity, when `None`) plus `opts.restarts` random starts. The
/// best start wins; its fidelity is recomputed by an independent circuit run.
pub fn optimize(
    ansatz: &Ansatz,
    target: &StateVector,
    psi0: &StateVector,
    init: Option<&[f64]>,
    opts: &OptimizeOptions,
) -> Result<RecompileResult> {
    if opts.budget == 0 {
        return Err(Error::Param("optimizer budget must be at least 1".into()));
    }
    if !(opts.learning_rate > 0.0 && opts.learning_rate.is_finite()) {
        return Err(Error::Param(format!("learning rate must be positive, got {}", opts.learning_rate)));
    }
    let np = ansatz.n_params();
    let first = match init {
        Some(th) => {
            ansatz.check_theta(th)?;
            (String::from("warm"), th.to_vec())
        }
        None => (String::from("identity"), vec![0.0; np]),
    };
    check_inputs(ansatz, &first.1, target, psi0)?;
    if !(opts.init_spread.is_finite() && opts.init_spread >= 0.0) {
        return Err(Error::Param(format!("init spread must be non-negative, got {}", opts.init_spread)));
    }
    let a = opts.init_spread;
    let mut starts = vec![first];
    for r in 0..opts.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(r as u64 + 1);
        starts.push((format!("random-{}", r + 1), (0..np).map(|_| if a > 0.0 { rng.gen_range(-a..=a) } else { 0.0 }).collect()));
    }
    let prog = Program::new(ansatz);
    let outcomes: Vec<StartOutcome> = starts
        .into_par_iter()
        .map(|(label, th)| match opts.optimizer {
            Optimizer::Lbfgs => lbfgs(&prog, th, &psi0.amps, &target.amps, opts, label),
            Optimizer::Adam => adam(&prog, th, &psi0.amps, &target.amps, opts, label),
        })
        .collect();
    let best = outcomes
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.fidelity.total_cmp(&b.fidelity).then(j.cmp(i)))
        .map(|(i, _)| i)
        .expect("at least one start");
    let out = crate::circuit::run(&ansatz.circuit(&outcomes[best].theta)?, psi0)?;
    let fid = target.fidelity(&out)?;
    Ok(RecompileResult {
        ansatz: ansatz.clone(),
        theta: outcomes[best].theta.clone(),
        fidelity: fid,
        iterations: outcomes.iter().map(|o| o.iterations).sum(),
        t: 0.0,
        starts: outcomes
            .iter()
            .map(|o| StartReport {
                label: o.label.clone(),
                fidelity: o.fidelity,
                iterations: o.iterations,
            })
            .collect(),
        history: outcomes[best].history.clone(),
        config_hash: None,
    })
}
