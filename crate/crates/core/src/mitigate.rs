//! Post-selection on conserved particle numbers, unitary folding of
//! two-qubit gates, Richardson zero-noise extrapolation, and diagonal
//! observables estimated from counts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{run_noisy, Circuit, Counts, NoiseModel};
use crate::{Error, Result, StateVector};

fn mask(l: usize) -> u64 {
    (1u64 << l) - 1
}

fn chain_length(c: &Counts) -> Result<usize> {
    let n = c.n_qubits();
    if n == 0 || n % 2 != 0 {
        return Err(Error::Param(format!("counts over {n} qubits do not describe two chains")));
    }
    Ok(n / 2)
}

/// Keeps bitstrings with `n_up` set bits on qubits 0…L−1 and `n_dn` on
/// L…2L−1.
pub fn post_select(c: &Counts, n_up: usize, n_dn: usize) -> Result<Counts> {
    let l = chain_length(c)?;
    let m = mask(l);
    let kept = c.retain(|k| (k & m).count_ones() as usize == n_up && (k >> l & m).count_ones() as usize == n_dn);
    if kept.is_empty() {
        return Err(Error::FullyFiltered {
            discarded: c.total_shots(),
        });
    }
    Ok(kept)
}

/// Noise scale for gate folding. λ = 1 + 2k/n folds the first k two-qubit
/// gates (by position) once; larger λ wraps around and folds gates again.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub lambda: f64,
}

impl FoldSpec {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 1.0) {
            return Err(Error::Param(format!("noise scale must be at least 1, got {lambda}")));
        }
        Ok(FoldSpec { lambda })
    }

    /// Extra G†G pairs inserted for `n` two-qubit gates, rounded up.
    pub fn n_folds(&self, n: usize) -> usize {
        let x = n as f64 * (self.lambda - 1.0) / 2.0;
        // absorb rounding noise in λ before taking the ceiling
        (x - 1e-9).ceil().max(0.0) as usize
    }
}

/// Replaces two-qubit gates G by G·G†·G (applied as G, G†, G) according to
/// `spec`. Single-qubit gates are never folded.
pub fn fold(c: &Circuit, spec: FoldSpec) -> Result<Circuit> {
    FoldSpec::new(spec.lambda)?;
    let n2 = c.two_qubit_count();
    let folds = spec.n_folds(n2);
    let (all, extra) = if n2 == 0 { (0, 0) } else { (folds / n2, folds % n2) };
    let mut out = Circuit::new(c.n_qubits());
    let mut seen = 0;
    for g in c.gates() {
        out.push(*g)?;
        if g.is_two_qubit() {
            let reps = all + usize::from(seen < extra);
            for _ in 0..reps {
                out.push(g.dagger())?;
                out.push(*g)?;
            }
            seen += 1;
        }
    }
    Ok(out)
}

/// Observables diagonal in the computational basis. Sites are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// Σ_i n_{i↑} n_{i↓}
    PUpdn,
    /// Σ_i n_{i↑} n_{i+1,↑}
    PUpup,
    /// n_{i↑} + n_{i↓}
    Density(usize),
    /// n_{i↑} n_{j↓}
    CorrUpdn(usize, usize),
    /// n_{i↑} n_{j↑} for i ≠ j, zero on the diagonal
    CorrUp(usize, usize),
}

impl Observable {
    pub fn weight(&self, bits: u64, l: usize) -> f64 {
        let m = mask(l);
        let (up, dn) = (bits & m, bits >> l & m);
        let bit = |x: u64, i: usize| (x >> i & 1) as f64;
        match *self {
            Observable::PUpdn => (up & dn).count_ones() as f64,
            Observable::PUpup => (up & (up >> 1)).count_ones() as f64,
            Observable::Density(i) => bit(up, i) + bit(dn, i),
            Observable::CorrUpdn(i, j) => bit(up, i) * bit(dn, j),
            Observable::CorrUp(i, j) if i == j => 0.0,
            Observable::CorrUp(i, j) => bit(up, i) * bit(up, j),
        }
    }

    /// Largest value the observable can take in the (n_up, n_dn) sector.
    pub fn upper_bound(&self, n_up: usize, n_dn: usize) -> f64 {
        match self {
            Observable::PUpdn => n_up.min(n_dn) as f64,
            Observable::PUpup => n_up.saturating_sub(1) as f64,
            Observable::Density(_) => 2.0,
            Observable::CorrUpdn(..) | Observable::CorrUp(..) => 1.0,
        }
    }

    fn check_sites(&self, l: usize) -> Result<()> {
        let sites: &[usize] = match self {
            Observable::Density(i) => &[*i],
            Observable::CorrUpdn(i, j) | Observable::CorrUp(i, j) => &[*i, *j],
            _ => &[],
        };
        match sites.iter().find(|&&s| s >= l) {
            Some(&s) => Err(Error::Param(format!("site {s} outside a chain of {l}"))),
            None => Ok(()),
        }
    }
}

/// Shot-weighted mean of the observable over the counts.
pub fn expectation(c: &Counts, obs: Observable) -> Result<f64> {
    if c.is_empty() {
        return Err(Error::EmptyCounts);
    }
    let l = chain_length(c)?;
    obs.check_sites(l)?;
    let sum: f64 = c.iter().map(|(k, n)| obs.weight(k, l) * n as f64).sum();
    Ok(sum / c.total_shots() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Extrapolation {
    /// Exact polynomial through all points.
    Richardson,
    /// Least-squares straight line.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZneEstimate {
    /// (λ, expectation) pairs in input order.
    pub points: Vec<(f64, f64)>,
    pub value: f64,
    /// Degree of the fitted polynomial.
    pub order: usize,
    pub method: Extrapolation,
}

fn check_points(points: &[(f64, f64)]) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::Param(format!("extrapolation needs at least 2 noise scales, got {}", points.len())));
    }
    for (i, &(x, y)) in points.iter().enumerate() {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::Param(format!("non-finite extrapolation point ({x}, {y})")));
        }
        if points[..i].iter().any(|&(p, _)| p == x) {
            return Err(Error::DuplicateScale(x));
        }
    }
    Ok(())
}

/// Richardson extrapolation: the Lagrange interpolant through all points,
/// evaluated at λ = 0.
pub fn zne(points: &[(f64, f64)]) -> Result<ZneEstimate> {
    check_points(points)?;
    let value = points
        .iter()
        .enumerate()
        .map(|(i, &(xi, yi))| {
            let w: f64 = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &(xj, _))| xj / (xj - xi))
                .product();
            w * yi
        })
        .sum();
    Ok(ZneEstimate {
        points: points.to_vec(),
        value,
        order: points.len() - 1,
        method: Extrapolation::Richardson,
    })
}

/// Least-squares line through the points, evaluated at λ = 0.
pub fn zne_linear(points: &[(f64, f64)]) -> Result<ZneEstimate> {
    check_points(points)?;
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|&(x, _)| (x - mx).powi(2)).sum();
    Ok(ZneEstimate {
        points: points.to_vec(),
        value: my - sxy / sxx * mx,
        order: 1,
        method: Extrapolation::Linear,
    })
}

pub fn extrapolate(points: &[(f64, f64)], method: Extrapolation) -> Result<ZneEstimate> {
    match method {
        Extrapolation::Richardson => zne(points),
        Extrapolation::Linear => zne_linear(points),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MitigationConfig {
    pub scales: Vec<f64>,
    /// Shots per noise scale.
    pub shots: u64,
    /// Shots drawn from each noise trajectory.
    pub shots_per_trajectory: u64,
    pub extrapolation: Extrapolation,
    pub n_up: usize,
    pub n_dn: usize,
}

impl Default for MitigationConfig {
    fn default() -> Self {
        MitigationConfig {
            scales: vec![1.0, 2.0, 3.0],
            shots: 6000,
            shots_per_trajectory: 10,
            extrapolation: Extrapolation::Richardson,
            n_up: 2,
            n_dn: 1,
        }
    }
}

impl MitigationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scales.is_empty() {
            return Err(Error::Param("no noise scales given".into()));
        }
        for (i, &s) in self.scales.iter().enumerate() {
            FoldSpec::new(s)?;
            if self.scales[..i].contains(&s) {
                return Err(Error::DuplicateScale(s));
            }
        }
        if self.shots_per_trajectory == 0 || self.shots == 0 || self.shots % self.shots_per_trajectory != 0 {
            return Err(Error::Param(format!(
                "shots ({}) must be a positive multiple of shots_per_trajectory ({})",
                self.shots, self.shots_per_trajectory
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalePoint {
    pub lambda: f64,
    pub raw: f64,
    pub post_selected: f64,
    pub retained_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitigatedValue {
    pub observable: Observable,
    /// Unfiltered estimate at the first (unscaled) noise level.
    pub raw: f64,
    /// Post-selected estimate at the first noise level.
    pub post_selected: f64,
    /// Extrapolated post-selected estimate; may leave the physical range.
    pub ps_zne: f64,
    /// `ps_zne` clamped to [0, upper bound of the observable].
    pub ps_zne_clamped: f64,
    pub points: Vec<ScalePoint>,
    pub zne: Option<ZneEstimate>,
}

impl MitigatedValue {
    /// `lambda,raw,post_selected,retained_fraction` rows, then `0,<zne>,<zne>,`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,raw,post_selected,retained_fraction\n");
        for p in &self.points {
            s += &format!(
                "{},{},{},{}\n",
                fmt12(p.lambda),
                fmt12(p.raw),
                fmt12(p.post_selected),
                fmt12(p.retained_fraction)
            );
        }
        s += &format!("0,{},{},\n", fmt12(self.ps_zne), fmt12(self.ps_zne));
        s
    }
}

/// Formats with 12 significant digits, dropping trailing zeros.
pub fn fmt12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let mag = x.abs().log10().floor() as i32;
    if (-5..12).contains(&mag) {
        let decimals = (11 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        format!("{x:.11e}")
    }
}

/// Fold, run noisily, post-select and extrapolate, once per noise scale in
/// `cfg.scales`. All scales share `nm.seed`, so their trajectories use common
/// random numbers and the noiseless limit is identical across scales.
pub fn mitigated_observable(
    c: &Circuit,
    psi0: &StateVector,
    nm: &NoiseModel,
    obs: Observable,
    cfg: &MitigationConfig,
) -> Result<MitigatedValue> {
    Ok(mitigated_observables(c, psi0, nm, &[obs], cfg)?.remove(0))
}

/// As [`mitigated_observable`], sharing the noisy runs across observables.
pub fn mitigated_observables(
    c: &Circuit,
    psi0: &StateVector,
    nm: &NoiseModel,
    observables: &[Observable],
    cfg: &MitigationConfig,
) -> Result<Vec<MitigatedValue>> {
    cfg.validate()?;
    nm.validate()?;
    let l = c.n_qubits() / 2;
    for o in observables {
        o.check_sites(l)?;
    }
    let runs: Vec<Result<(Counts, Counts)>> = cfg
        .scales
        .par_iter()
        .map(|&lambda| {
            let folded = fold(c, FoldSpec::new(lambda)?)?;
            let trajectories = (cfg.shots / cfg.shots_per_trajectory) as usize;
            let raw = run_noisy(&folded, psi0, nm, trajectories, cfg.shots_per_trajectory)?;
            let kept = post_select(&raw, cfg.n_up, cfg.n_dn)?;
            Ok((raw, kept))
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    observables
        .iter()
        .map(|&obs| {
            let mut points = Vec::with_capacity(runs.len());
            for ((raw, kept), &lambda) in runs.iter().zip(&cfg.scales) {
                points.push(ScalePoint {
                    lambda,
                    raw: expectation(raw, obs)?,
                    post_selected: expectation(kept, obs)?,
                    retained_fraction: kept.total_shots() as f64 / raw.total_shots() as f64,
                });
            }
            let zne = if points.len() >= 2 {
                let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.lambda, p.post_selected)).collect();
                Some(extrapolate(&xy, cfg.extrapolation)?)
            } else {
                None
            };
            let ps_zne = zne.as_ref().map_or(points[0].post_selected, |z| z.value);
            Ok(MitigatedValue {
                observable: obs,
                raw: points[0].raw,
                post_selected: points[0].post_selected,
                ps_zne,
                ps_zne_clamped: ps_zne.clamp(0.0, obs.upper_bound(cfg.n_up, cfg.n_dn)),
                points,
                zne,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;

    #[test]
    fn post_select_filters_and_signals_empty() {
        // L = 2: qubits 0,1 ↑ chain, 2,3 ↓ chain
        let c = Counts::from_pairs(4, [(0b0101, 10), (0b0111, 5), (0b0001, 3)]);
        let kept = post_select(&c, 1, 1).unwrap();
        assert_eq!(kept.total_shots(), 10);
        assert_eq!(post_select(&kept, 1, 1).unwrap(), kept);
        let bad = Counts::from_pairs(4, [(0b0011, 100)]);
        assert_eq!(post_select(&bad, 1, 1), Err(Error::FullyFiltered { discarded: 100 }));
    }

    #[test]
    fn fold_counts() {
        let mut c = Circuit::new(3);
        for k in 0..10 {
            c.push(Gate::Cz { a: k % 2, b: 2 }).unwrap();
            c.push(Gate::Rz { q: 0, angle: 0.3 }).unwrap();
        }
        assert_eq!(fold(&c, FoldSpec::new(1.0).unwrap()).unwrap(), c);
        assert_eq!(fold(&c, FoldSpec::new(2.0).unwrap()).unwrap().two_qubit_count(), 20);
        assert_eq!(fold(&c, FoldSpec::new(3.0).unwrap()).unwrap().two_qubit_count(), 30);
        assert_eq!(fold(&c, FoldSpec::new(3.0).unwrap()).unwrap().count_named("RZ"), 10);
        assert!(FoldSpec::new(0.5).is_err());
    }

    #[test]
    fn zne_examples() {
        let v = 0.37;
        assert!((zne(&[(1.0, v), (2.0, v), (3.0, v)]).unwrap().value - v).abs() < 1e-15);
        assert!((zne(&[(1.0, 3.0), (2.0, 5.0), (3.0, 7.0)]).unwrap().value - 1.0).abs() < 1e-12);
        let (v1, v2, v3) = (0.8, 0.7, 0.65);
        let z = zne(&[(1.0, v1), (2.0, v2), (3.0, v3)]).unwrap();
        assert!((z.value - (3.0 * v1 - 3.0 * v2 + v3)).abs() < 1e-14);
        assert_eq!(z.order, 2);
        assert_eq!(zne(&[(1.0, 1.0), (1.0, 2.0)]), Err(Error::DuplicateScale(1.0)));
        assert!(zne(&[(1.0, 1.0)]).is_err());
        assert!((zne_linear(&[(1.0, 3.0), (2.0, 5.0), (3.0, 7.0)]).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expectation_examples() {
        // L = 7, ↑ on sites 2 and 3, ↓ on site 4
        let k = (1u64 << 2) | (1 << 3) | (1 << (7 + 4));
        let c = Counts::from_pairs(14, [(k, 10)]);
        assert_eq!(expectation(&c, Observable::PUpup).unwrap(), 1.0);
        assert_eq!(expectation(&c, Observable::PUpdn).unwrap(), 0.0);
        assert_eq!(expectation(&c, Observable::Density(4)).unwrap(), 1.0);
        assert_eq!(expectation(&c, Observable::CorrUp(2, 3)).unwrap(), 1.0);
        assert_eq!(expectation(&c, Observable::CorrUp(2, 2)).unwrap(), 0.0);
        let d = (1u64 << 4) | (1 << 0) | (1 << (7 + 4));
        let c = Counts::from_pairs(14, [(d, 1)]);
        assert_eq!(expectation(&c, Observable::PUpdn).unwrap(), 1.0);
        assert_eq!(expectation(&Counts::new(14), Observable::PUpdn), Err(Error::EmptyCounts));
        assert!(expectation(&c, Observable::Density(7)).is_err());
    }

    #[test]
    fn fmt12_digits() {
        assert_eq!(fmt12(0.1 + 0.2), "0.3");
        assert_eq!(fmt12(1.0), "1");
        assert_eq!(fmt12(-2.5), "-2.5");
        assert_eq!(fmt12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt12(123.456789012345), "123.456789012");
        assert_eq!(fmt12(0.0), "0");
        assert_eq!(fmt12(1e-9), "1.00000000000e-9");
    }
}
