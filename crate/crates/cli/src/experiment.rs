use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use doublon_core::circuit::{run, run_noisy, Circuit, NoiseModel};
use doublon_core::exact::{self, InitialConfig, KrylovOptions, KrylovPropagator, Method, ObservableRecord};
use doublon_core::mitigate::{self, fmt12, MitigationConfig, Observable};
use doublon_core::model::{build_fock_hamiltonian, build_sector_basis, ModelParams};
use doublon_core::recompile::{self, Ansatz, RecompileResult};
use doublon_core::trotter::{build_circuit, TrotterPlan};
use doublon_core::{Error, StateVector};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::config::{Engine, Experiment, ExperimentConfig, Mitigation, NoisyCircuit};
use crate::plot;

const N_UP: usize = 2;
const N_DN: usize = 1;
/// Sector dimension above which exact evolution uses Krylov instead of a
/// dense eigendecomposition.
const DENSE_LIMIT: usize = 400;

/// One row of a sweep: the varied parameters plus its position.
#[derive(Debug, Clone, Copy)]
struct Point {
    index: usize,
    delta: f64,
    u: f64,
    t: f64,
}

/// A CSV table with named columns; NaN marks a missing value.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|&x| fmt12(x)).collect();
            s += &cells.join(",");
            s.push('\n');
        }
        s
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

/// Everything an experiment writes, before it touches the disk.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub results: Table,
    /// Extra CSV files (name, table), e.g. the correlation matrices.
    pub extra: Vec<(String, Table)>,
    pub warnings: Vec<String>,
}

struct Measured {
    cells: Vec<(String, f64)>,
    warnings: Vec<String>,
}

fn params(cfg: &ExperimentConfig, delta: f64, u: f64) -> doublon_core::Result<ModelParams> {
    ModelParams::new(cfg.l.expect("resolved"), delta, u, cfg.v)
}

fn initial(cfg: &ExperimentConfig) -> InitialConfig {
    cfg.initial.expect("resolved")
}

fn exact_record(cfg: &ExperimentConfig, p: &Point) -> anyhow::Result<ObservableRecord> {
    let mp = params(cfg, p.delta, p.u)?;
    let b = build_sector_basis(&mp, N_UP, N_DN)?;
    let psi0 = exact::initial_state(&b, initial(cfg))?;
    let method = if b.dim() > DENSE_LIMIT { Method::Krylov } else { Method::Dense };
    let psi = exact::evolve(&build_fock_hamiltonian(&b), &psi0, p.t, method)?;
    Ok(exact::measure(&psi, &b, p.t)?)
}

/// Exact time series for one δ, stepping the state from point to point.
fn exact_series(cfg: &ExperimentConfig, delta: f64, times: &[f64]) -> anyhow::Result<Vec<ObservableRecord>> {
    let mp = params(cfg, delta, cfg.u)?;
    let b = build_sector_basis(&mp, N_UP, N_DN)?;
    let h = build_fock_hamiltonian(&b);
    let mut psi = exact::initial_state(&b, initial(cfg))?;
    let mut prop = KrylovPropagator::new(&h, KrylovOptions::default());
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        prop.propagate_in_place(&mut psi.amps, t - now)?;
        now = t;
        out.push(exact::measure(&psi, &b, t)?);
    }
    Ok(out)
}

fn pair_cells(prefix: &str, p_updn: f64, p_upup: f64) -> Vec<(String, f64)> {
    vec![(format!("{prefix}p_updn"), p_updn), (format!("{prefix}p_upup"), p_upup)]
}

fn density_cells(cfg: &ExperimentConfig, density: &[f64]) -> Vec<(String, f64)> {
    if !cfg.density {
        return Vec::new();
    }
    density.iter().enumerate().map(|(i, &n)| (format!("n_{i}"), n)).collect()
}

fn exact_cells(cfg: &ExperimentConfig, rec: &ObservableRecord) -> Vec<(String, f64)> {
    let mut cells = pair_cells("", rec.p_updn, rec.p_upup);
    cells.extend(density_cells(cfg, &rec.density));
    cells
}

/// Exact diagonal expectations from the probabilities of a qubit register.
fn state_expectation(psi: &StateVector, l: usize, obs: Observable) -> f64 {
    psi.amps
        .iter()
        .enumerate()
        .map(|(k, a)| a.norm_sqr() * obs.weight(k as u64, l))
        .sum()
}

fn trotter_plan(cfg: &ExperimentConfig, p: &Point) -> anyhow::Result<TrotterPlan> {
    Ok(TrotterPlan::new(params(cfg, p.delta, p.u)?, initial(cfg), p.t, cfg.dt)?)
}

fn point_hash(cfg: &ExperimentConfig, p: &Point) -> String {
    let key = format!("{}|delta={}|u={}|t={}", cfg.hash(), p.delta, p.u, p.t);
    Sha256::digest(key.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Recompiles the Trotter circuit of a point, reusing a sidecar JSON when its
/// hash matches.
fn recompiled(cfg: &ExperimentConfig, p: &Point, plan: &TrotterPlan, cache: &Path) -> anyhow::Result<RecompileResult> {
    let hash = point_hash(cfg, p);
    let file = cache.join(format!("point-{:04}.json", p.index));
    if let Ok(text) = fs::read_to_string(&file) {
        if let Ok(r) = RecompileResult::from_json(&text) {
            if r.config_hash.as_deref() == Some(hash.as_str()) {
                return Ok(r);
            }
        }
    }
    let psi0 = plan.initial_state()?;
    let target = run(&build_circuit(plan, false)?, &psi0)?;
    let ansatz = Ansatz::new(plan.params.l, cfg.recompile.rounds.expect("resolved"), cfg.recompile.entangler)?;
    let mut r = recompile::optimize(&ansatz, &target, &psi0, None, &cfg.recompile.options(cfg.seed))?;
    r.t = p.t;
    r.config_hash = Some(hash);
    fs::create_dir_all(cache)?;
    fs::write(&file, r.to_json()?).with_context(|| format!("writing {}", file.display()))?;
    Ok(r)
}

fn observables(cfg: &ExperimentConfig, correlations: bool) -> Vec<Observable> {
    let l = cfg.l.expect("resolved");
    let mut obs = vec![Observable::PUpdn, Observable::PUpup];
    if cfg.density || correlations {
        obs.extend((0..l).map(Observable::Density));
    }
    if correlations {
        for i in 0..l {
            for j in 0..l {
                obs.push(Observable::CorrUpdn(i, j));
                obs.push(Observable::CorrUp(i, j));
            }
        }
    }
    obs
}

fn point_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Circuit-engine values for one point: one number per observable, plus
/// named extra cells. The returned values are the most mitigated level the
/// config asks for.
struct CircuitPoint {
    values: Vec<f64>,
    cells: Vec<(String, f64)>,
    warnings: Vec<String>,
}

fn circuit_point(cfg: &ExperimentConfig, p: &Point, obs: &[Observable], cache: &Path) -> anyhow::Result<CircuitPoint> {
    let l = cfg.l.expect("resolved");
    let plan = trotter_plan(cfg, p)?;
    let psi0 = plan.initial_state()?;
    let mut cells = Vec::new();
    let mut warnings = Vec::new();
    let compiled = match (cfg.engine, cfg.noise.circuit) {
        (Engine::Recompiled, _) | (Engine::Noisy, NoisyCircuit::Recompiled) => Some(recompiled(cfg, p, &plan, cache)?),
        _ => None,
    };
    let values = match cfg.engine {
        Engine::Trotter | Engine::Recompiled => {
            let circuit = match &compiled {
                Some(r) => r.circuit()?,
                None => build_circuit(&plan, false)?,
            };
            let out = run(&circuit, &psi0)?;
            let v: Vec<f64> = obs.iter().map(|&o| state_expectation(&out, l, o)).collect();
            cells.extend(pair_cells("", v[0], v[1]));
            v
        }
        Engine::Noisy => {
            let body = match &compiled {
                Some(r) => r.circuit()?,
                None => build_circuit(&plan, false)?,
            };
            let mut circuit = Circuit::from_gates(plan.n_qubits(), plan.preparation()?)?;
            circuit.append(&body)?;
            let zero = StateVector::zero_qubits(plan.n_qubits());
            let nm = NoiseModel::new(cfg.noise.p1, cfg.noise.p2, point_seed(cfg.seed, p.index))?;
            let scales = match cfg.mitigation {
                Mitigation::PsZne => cfg.noise.scales.clone(),
                _ => vec![1.0],
            };
            let mc = MitigationConfig {
                scales,
                shots: cfg.shots,
                shots_per_trajectory: cfg.noise.shots_per_trajectory,
                extrapolation: cfg.noise.extrapolation,
                n_up: N_UP,
                n_dn: N_DN,
            };
            noisy_values(cfg, p, &circuit, &zero, &nm, &mc, obs, &mut cells, &mut warnings)?
        }
        Engine::Exact => unreachable!("exact points are not circuits"),
    };
    if let Some(r) = &compiled {
        cells.push(("fidelity".into(), r.fidelity));
    }
    Ok(CircuitPoint { values, cells, warnings })
}

#[allow(clippy::too_many_arguments)]
fn noisy_values(
    cfg: &ExperimentConfig,
    p: &Point,
    circuit: &Circuit,
    zero: &StateVector,
    nm: &NoiseModel,
    mc: &MitigationConfig,
    obs: &[Observable],
    cells: &mut Vec<(String, f64)>,
    warnings: &mut Vec<String>,
) -> anyhow::Result<Vec<f64>> {
    let nan = f64::NAN;
    let ps = cfg.mitigation != Mitigation::None;
    let zne = cfg.mitigation == Mitigation::PsZne;
    match mitigate::mitigated_observables(circuit, zero, nm, obs, mc) {
        Ok(m) => {
            cells.extend(pair_cells("raw_", m[0].raw, m[1].raw));
            if ps {
                cells.extend(pair_cells("ps_", m[0].post_selected, m[1].post_selected));
                cells.push(("retained_fraction".into(), m[0].points[0].retained_fraction));
            }
            if zne {
                cells.extend(pair_cells("zne_", m[0].ps_zne, m[1].ps_zne));
                cells.extend(pair_cells("zne_clamped_", m[0].ps_zne_clamped, m[1].ps_zne_clamped));
            }
            Ok(m.iter()
                .map(|v| match cfg.mitigation {
                    Mitigation::None => v.raw,
                    Mitigation::Ps => v.post_selected,
                    Mitigation::PsZne => v.ps_zne,
                })
                .collect())
        }
        Err(Error::FullyFiltered { discarded }) if ps => {
            warnings.push(format!(
                "point {} (delta={}, u={}, t={}): post-selection discarded all {discarded} shots",
                p.index, p.delta, p.u, p.t
            ));
            let raw = run_noisy(circuit, zero, nm, (mc.shots / mc.shots_per_trajectory) as usize, mc.shots_per_trajectory)?;
            let r: Vec<f64> = obs.iter().map(|&o| mitigate::expectation(&raw, o)).collect::<Result<_, _>>()?;
            cells.extend(pair_cells("raw_", r[0], r[1]));
            cells.extend(pair_cells("ps_", nan, nan));
            cells.push(("retained_fraction".into(), 0.0));
            if zne {
                cells.extend(pair_cells("zne_", nan, nan));
                cells.extend(pair_cells("zne_clamped_", nan, nan));
            }
            Ok(vec![nan; obs.len()])
        }
        Err(e) => Err(e.into()),
    }
}

fn measure_point(cfg: &ExperimentConfig, p: &Point, cache: &Path) -> anyhow::Result<Measured> {
    if cfg.engine == Engine::Exact {
        let rec = exact_record(cfg, p)?;
        return Ok(Measured {
            cells: exact_cells(cfg, &rec),
            warnings: Vec::new(),
        });
    }
    let obs = observables(cfg, false);
    let cp = circuit_point(cfg, p, &obs, cache)?;
    let mut cells = cp.cells;
    if cfg.density {
        cells.extend(density_cells(cfg, &cp.values[2..]));
    }
    let rec = exact_record(cfg, p)?;
    cells.extend(pair_cells("exact_", rec.p_updn, rec.p_upup));
    Ok(Measured {
        cells,
        warnings: cp.warnings,
    })
}

fn points(cfg: &ExperimentConfig) -> Vec<Point> {
    let t = cfg.t.expect("resolved");
    let mut pts = Vec::new();
    let mut push = |delta, u, t| {
        pts.push(Point {
            index: pts.len(),
            delta,
            u,
            t,
        })
    };
    match cfg.experiment {
        Experiment::SweepTime => {
            for &d in &cfg.deltas {
                for s in cfg.times() {
                    push(d, cfg.u, s);
                }
            }
        }
        Experiment::SweepU => cfg.sweep.values.iter().for_each(|&u| push(cfg.delta, u, t)),
        Experiment::SweepDelta | Experiment::Dissociation => cfg.sweep.values.iter().for_each(|&d| push(d, cfg.u, t)),
        Experiment::Correlations => push(cfg.delta, cfg.u, t),
    }
    pts
}

fn leading_columns(cfg: &ExperimentConfig, p: &Point) -> Vec<(String, f64)> {
    match cfg.experiment {
        Experiment::SweepTime => vec![("delta".into(), p.delta), ("t".into(), p.t)],
        Experiment::SweepU => vec![("u".into(), p.u)],
        _ => vec![("delta".into(), p.delta)],
    }
}

fn assemble(cfg: &ExperimentConfig, pts: &[Point], measured: Vec<Measured>) -> Outcome {
    let mut header = Vec::new();
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for (p, m) in pts.iter().zip(measured) {
        let mut cells = leading_columns(cfg, p);
        cells.extend(m.cells);
        if header.is_empty() {
            header = cells.iter().map(|(n, _)| n.clone()).collect();
        }
        debug_assert_eq!(header.len(), cells.len());
        rows.push(cells.into_iter().map(|(_, v)| v).collect());
        warnings.extend(m.warnings);
    }
    Outcome {
        results: Table { header, rows },
        extra: Vec::new(),
        warnings,
    }
}

fn correlations(cfg: &ExperimentConfig, cache: &Path) -> anyhow::Result<Outcome> {
    let l = cfg.l.expect("resolved");
    let p = points(cfg)[0];
    let rec = exact_record(cfg, &p)?;
    let (values, warnings) = if cfg.engine == Engine::Exact {
        let mut v = vec![rec.p_updn, rec.p_upup];
        v.extend(&rec.density);
        for i in 0..l {
            for j in 0..l {
                v.push(rec.corr_updn[i][j]);
                v.push(rec.corr_up[i][j]);
            }
        }
        (v, Vec::new())
    } else {
        let cp = circuit_point(cfg, &p, &observables(cfg, true), cache)?;
        (cp.values, cp.warnings)
    };
    let circuit = cfg.engine != Engine::Exact;
    let matrix = |offset: usize, reference: &Vec<Vec<f64>>| {
        let mut header = vec!["i".to_string(), "j".into(), "value".into()];
        if circuit {
            header.push("exact".into());
        }
        let mut rows = Vec::new();
        for i in 0..l {
            for j in 0..l {
                let mut r = vec![i as f64, j as f64, values[2 + l + 2 * (i * l + j) + offset]];
                if circuit {
                    r.push(reference[i][j]);
                }
                rows.push(r);
            }
        }
        Table { header, rows }
    };
    let mut dheader = vec!["i".to_string(), "value".into()];
    if circuit {
        dheader.push("exact".into());
    }
    let density = Table {
        header: dheader,
        rows: (0..l)
            .map(|i| {
                let mut r = vec![i as f64, values[2 + i]];
                if circuit {
                    r.push(rec.density[i]);
                }
                r
            })
            .collect(),
    };
    Ok(Outcome {
        results: matrix(0, &rec.corr_updn),
        extra: vec![("corr_up.csv".into(), matrix(1, &rec.corr_up)), ("density.csv".into(), density)],
        warnings,
    })
}

/// Runs the experiment on a pool of `jobs` threads. Recompiled circuits are
/// cached as JSON under `cache`. Results do not depend on `jobs`.
pub fn compute(cfg: &ExperimentConfig, jobs: usize, cache: &Path) -> anyhow::Result<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    pool.install(|| {
        if cfg.experiment == Experiment::Correlations {
            return correlations(cfg, cache);
        }
        let pts = points(cfg);
        let measured: Vec<Measured> = if cfg.engine == Engine::Exact && cfg.experiment == Experiment::SweepTime {
            let times = cfg.times();
            let series: Vec<anyhow::Result<Vec<ObservableRecord>>> =
                cfg.deltas.par_iter().map(|&d| exact_series(cfg, d, &times)).collect();
            let mut out = Vec::new();
            for s in series {
                out.extend(s?.iter().map(|rec| Measured {
                    cells: exact_cells(cfg, rec),
                    warnings: Vec::new(),
                }));
            }
            out
        } else {
            pts.par_iter()
                .map(|p| measure_point(cfg, p, cache))
                .collect::<anyhow::Result<Vec<_>>>()?
        };
        Ok(assemble(cfg, &pts, measured))
    })
}

/// Writes `results.csv`, `config.resolved`, `plot.gp` and any extra tables
/// into `out`, returning the warnings raised along the way.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize, out: &Path) -> anyhow::Result<Vec<String>> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let cache: PathBuf = out.join("recompiled");
    let outcome = compute(cfg, jobs, &cache)?;
    let mut resolved = cfg.clone();
    resolved.out = out.to_path_buf();
    fs::write(out.join("results.csv"), outcome.results.to_csv())?;
    for (name, table) in &outcome.extra {
        fs::write(out.join(name), table.to_csv())?;
    }
    fs::write(out.join("config.resolved"), resolved.to_toml())?;
    fs::write(out.join("plot.gp"), plot::script(cfg, &outcome.results.header))?;
    Ok(outcome.warnings)
}
