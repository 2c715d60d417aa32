use std::fmt;
use std::path::PathBuf;

use doublon_core::exact::InitialConfig;
use doublon_core::mitigate::Extrapolation;
use doublon_core::recompile::{Entangler, OptimizeOptions, Optimizer};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Largest chain the circuit engines simulate (2L qubits).
pub const MAX_CIRCUIT_L: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SweepTime,
    #[serde(rename = "sweep-U")]
    SweepU,
    SweepDelta,
    Correlations,
    Dissociation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Exact,
    Trotter,
    Recompiled,
    Noisy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mitigation {
    None,
    Ps,
    PsZne,
}

/// Circuit sampled by the noisy engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoisyCircuit {
    Recompiled,
    Trotter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub step: Option<f64>,
    /// Explicit grid; when non-empty it replaces start/stop/step.
    pub values: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            start: None,
            stop: None,
            step: None,
            values: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub p1: f64,
    pub p2: f64,
    pub shots_per_trajectory: u64,
    pub scales: Vec<f64>,
    pub extrapolation: Extrapolation,
    pub circuit: NoisyCircuit,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            p1: 0.001,
            p2: 0.01,
            shots_per_trajectory: 10,
            scales: vec![1.0, 2.0, 3.0],
            extrapolation: Extrapolation::Richardson,
            circuit: NoisyCircuit::Recompiled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecompileConfig {
    /// Default 8, or 12 for the dissociation experiment.
    pub rounds: Option<usize>,
    pub entangler: Entangler,
    pub optimizer: Optimizer,
    pub budget: usize,
    pub restarts: usize,
    pub learning_rate: f64,
    pub init_spread: f64,
    pub target_fidelity: f64,
    pub min_improvement: f64,
    pub patience: usize,
}

impl Default for RecompileConfig {
    fn default() -> Self {
        let o = OptimizeOptions::default();
        RecompileConfig {
            rounds: None,
            entangler: Entangler::ChainHeavy,
            optimizer: o.optimizer,
            budget: o.budget,
            restarts: o.restarts,
            learning_rate: o.learning_rate,
            init_spread: o.init_spread,
            target_fidelity: o.target_fidelity,
            min_improvement: o.min_improvement,
            patience: o.patience,
        }
    }
}

impl RecompileConfig {
    pub fn options(&self, seed: u64) -> OptimizeOptions {
        OptimizeOptions {
            optimizer: self.optimizer,
            budget: self.budget,
            restarts: self.restarts,
            learning_rate: self.learning_rate,
            init_spread: self.init_spread,
            target_fidelity: self.target_fidelity,
            min_improvement: self.min_improvement,
            patience: self.patience,
            seed,
        }
    }
}

/// One experiment, as read from TOML. Optional fields get engine- and
/// experiment-dependent defaults in [`ExperimentConfig::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub engine: Engine,
    pub mitigation: Mitigation,
    /// Defaults to the dissociation state for the dissociation experiment,
    /// the walk state otherwise.
    pub initial: Option<InitialConfig>,
    /// Chain length; 51 for the exact engine, 7 for circuit engines.
    pub l: Option<usize>,
    /// J↓/J↑.
    pub delta: f64,
    /// Time series for sweep-time, one per entry; empty means `[delta]`.
    pub deltas: Vec<f64>,
    pub u: f64,
    pub v: f64,
    /// Evaluation time, or the final time of a time series, in units of 1/J↑.
    pub t: Option<f64>,
    /// Spacing of time-series output points.
    pub t_step: Option<f64>,
    /// Trotter step.
    pub dt: f64,
    /// Append per-site densities n_0… to time-series rows.
    pub density: bool,
    pub shots: u64,
    pub seed: u64,
    pub out: PathBuf,
    pub sweep: SweepConfig,
    pub noise: NoiseConfig,
    pub recompile: RecompileConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: Experiment::SweepTime,
            engine: Engine::Exact,
            mitigation: Mitigation::None,
            initial: None,
            l: None,
            delta: 0.2,
            deltas: Vec::new(),
            u: 10.0,
            v: 10.0,
            t: None,
            t_step: None,
            dt: 0.1,
            density: false,
            shots: 6000,
            seed: 0,
            out: PathBuf::from("results"),
            sweep: SweepConfig::default(),
            noise: NoiseConfig::default(),
            recompile: RecompileConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.into(),
        message: message.into(),
    }
}

/// Parses TOML text, applying `key=value` overrides (dotted keys reach into
/// tables) before deserializing. Unknown keys are rejected.
pub fn parse(text: &str, overrides: &[String]) -> anyhow::Result<ExperimentConfig> {
    if overrides.is_empty() {
        // direct deserialization keeps line/column spans in the diagnostics
        return toml::from_str(text).map_err(|e: toml::de::Error| anyhow::anyhow!("{e}"));
    }
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| anyhow::anyhow!("{e}"))?;
    for o in overrides {
        let (key, raw) = o
            .split_once('=')
            .ok_or_else(|| anyhow::anyhow!("override `{o}` is not of the form key=value"))?;
        set_dotted(&mut table, key.trim(), parse_value(raw.trim()))?;
    }
    let cfg: ExperimentConfig = table.try_into().map_err(|e: toml::de::Error| anyhow::anyhow!("{e}"))?;
    Ok(cfg)
}

fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> anyhow::Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| anyhow::anyhow!("empty override key"))?;
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| anyhow::anyhow!("override `{key}`: `{p}` is not a table"))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// The TOML spelling of an enum value.
fn name<T: Serialize>(v: &T) -> String {
    toml::Value::try_from(v).map(|v| v.to_string()).unwrap_or_default()
}

fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| start + k as f64 * step).map(|x| (x * 1e12).round() / 1e12).collect()
}

impl ExperimentConfig {
    pub fn is_circuit(&self) -> bool {
        self.engine != Engine::Exact
    }

    /// Fills every optional field and checks the combined invariants.
    pub fn resolve(mut self) -> Result<ExperimentConfig, ConfigError> {
        let exact = self.engine == Engine::Exact;
        let l = *self.l.get_or_insert(if exact { 51 } else { 7 });
        if l % 2 == 0 {
            return Err(err("l", "L must be odd"));
        }
        if l < 3 {
            return Err(err("l", "L must be at least 3"));
        }
        if !exact && l > MAX_CIRCUIT_L {
            return Err(err("l", format!("circuit engines support L ≤ {MAX_CIRCUIT_L}, got {l}")));
        }
        if l > doublon_core::model::MAX_SITES {
            return Err(err("l", format!("L ≤ {} required", doublon_core::model::MAX_SITES)));
        }
        if self.mitigation != Mitigation::None && self.engine != Engine::Noisy {
            return Err(err(
                "mitigation",
                format!(
                    "mitigation = {} requires engine = \"noisy\" (engine is {})",
                    name(&self.mitigation),
                    name(&self.engine)
                ),
            ));
        }
        let initial = *self.initial.get_or_insert(match self.experiment {
            Experiment::Dissociation => InitialConfig::Dissociation,
            _ => InitialConfig::Walk,
        });
        if self.experiment == Experiment::Dissociation && initial != InitialConfig::Dissociation {
            return Err(err("initial", "the dissociation experiment starts from the dissociation state"));
        }
        let t = *self.t.get_or_insert(match (exact, self.experiment) {
            (true, _) => 10.0,
            (false, Experiment::Dissociation) => 2.5,
            (false, _) => 1.6,
        });
        if !(t.is_finite() && t >= 0.0) {
            return Err(err("t", format!("must be a non-negative time, got {t}")));
        }
        let t_step = *self.t_step.get_or_insert(if exact { 0.1 } else { 0.2 });
        if !(t_step.is_finite() && t_step > 0.0) {
            return Err(err("t_step", "must be positive"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(err("dt", "must be positive"));
        }
        for (name, x) in [("delta", self.delta), ("u", self.u), ("v", self.v)] {
            if !x.is_finite() {
                return Err(err(name, "must be finite"));
            }
        }
        if self.delta < 0.0 || self.deltas.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(err("delta", "hopping ratios must be non-negative"));
        }
        if self.deltas.is_empty() {
            self.deltas.push(self.delta);
        }
        if self.shots == 0 {
            return Err(err("shots", "must be positive"));
        }
        self.resolve_sweep(exact)?;
        if self.recompile.rounds.is_none() {
            self.recompile.rounds = Some(if self.experiment == Experiment::Dissociation { 12 } else { 8 });
        }
        if self.recompile.budget == 0 {
            return Err(err("recompile.budget", "must be at least 1"));
        }
        if !(self.recompile.learning_rate > 0.0) {
            return Err(err("recompile.learning_rate", "must be positive"));
        }
        if !(self.recompile.init_spread >= 0.0) {
            return Err(err("recompile.init_spread", "must be non-negative"));
        }
        let n = &self.noise;
        for (name, p) in [("noise.p1", n.p1), ("noise.p2", n.p2)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(err(name, format!("must lie in [0, 1], got {p}")));
            }
        }
        if n.shots_per_trajectory == 0 || self.shots % n.shots_per_trajectory != 0 {
            return Err(err(
                "noise.shots_per_trajectory",
                format!("must divide shots ({}), got {}", self.shots, n.shots_per_trajectory),
            ));
        }
        if n.scales.is_empty() || n.scales.iter().any(|s| !(s.is_finite() && *s >= 1.0)) {
            return Err(err("noise.scales", "noise scales must be at least 1"));
        }
        for (i, s) in n.scales.iter().enumerate() {
            if n.scales[..i].contains(s) {
                return Err(err("noise.scales", format!("duplicate scale {s}")));
            }
        }
        if self.mitigation == Mitigation::PsZne && n.scales.len() < 2 {
            return Err(err("noise.scales", "ps-zne needs at least two noise scales"));
        }
        if n.scales[0] != 1.0 {
            return Err(err("noise.scales", "the first scale must be 1 (the unfolded circuit)"));
        }
        Ok(self)
    }

    fn resolve_sweep(&mut self, exact: bool) -> Result<(), ConfigError> {
        let (start, stop, step) = match self.experiment {
            Experiment::SweepU => (0.0, 20.0, 1.0),
            Experiment::SweepDelta if exact => (0.05, 2.0, 0.05),
            Experiment::SweepDelta => (0.2, 2.0, 0.2),
            Experiment::Dissociation => (0.2, 2.0, 0.2),
            _ => (0.0, 0.0, 1.0),
        };
        let s = &mut self.sweep;
        let (start, stop, step) = (*s.start.get_or_insert(start), *s.stop.get_or_insert(stop), *s.step.get_or_insert(step));
        if s.values.is_empty() {
            if !(step > 0.0 && stop >= start && start.is_finite() && stop.is_finite()) {
                return Err(err("sweep", format!("invalid grid start={start} stop={stop} step={step}")));
            }
            if matches!(self.experiment, Experiment::SweepU | Experiment::SweepDelta | Experiment::Dissociation) {
                s.values = grid(start, stop, step);
            }
        }
        if s.values.iter().any(|x| !x.is_finite()) {
            return Err(err("sweep.values", "must be finite"));
        }
        if matches!(self.experiment, Experiment::SweepDelta | Experiment::Dissociation) && s.values.iter().any(|&d| d < 0.0) {
            return Err(err("sweep.values", "hopping ratios must be non-negative"));
        }
        Ok(())
    }

    /// Output times of a series: 0, t_step, …, t.
    pub fn times(&self) -> Vec<f64> {
        let t = self.t.expect("resolved");
        let step = self.t_step.expect("resolved");
        let mut ts = grid(0.0, t, step);
        if (ts.last().copied().unwrap_or(0.0) - t).abs() > 1e-9 {
            ts.push(t);
        }
        ts
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the resolved configuration, with the output directory blanked.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        let digest = Sha256::digest(c.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_resolves_to_defaults() {
        let c = parse("", &[]).unwrap().resolve().unwrap();
        assert_eq!(c.l, Some(51));
        assert_eq!(c.t, Some(10.0));
        assert_eq!(c.shots, 6000);
        assert_eq!(c.deltas, vec![0.2]);
        assert_eq!((c.u, c.v, c.dt), (10.0, 10.0, 0.1));
    }

    #[test]
    fn circuit_defaults() {
        let c = parse("engine = \"noisy\"\nmitigation = \"ps-zne\"", &[]).unwrap().resolve().unwrap();
        assert_eq!(c.l, Some(7));
        assert_eq!(c.t, Some(1.6));
        assert_eq!(c.recompile.rounds, Some(8));
        let d = parse("experiment = \"dissociation\"\nengine = \"recompiled\"", &[]).unwrap().resolve().unwrap();
        assert_eq!((d.t, d.recompile.rounds), (Some(2.5), Some(12)));
        assert_eq!(d.initial, Some(InitialConfig::Dissociation));
        assert_eq!(d.sweep.values.len(), 10);
    }

    #[test]
    fn rejects_conflicts_and_typos() {
        let e = parse("mitigation = \"ps\"", &[]).unwrap().resolve().unwrap_err();
        assert_eq!(e.field, "mitigation");
        assert!(e.message.contains("engine"));
        let e = parse("l = 8", &[]).unwrap().resolve().unwrap_err();
        assert_eq!(e.message, "L must be odd");
        assert!(parse("shotz = 3", &[]).is_err());
        assert!(parse("[noise]\np3 = 0.1", &[]).is_err());
    }

    #[test]
    fn overrides() {
        let c = parse("u = 3.0", &["u=4.5".into(), "noise.p2=0.02".into(), "engine=trotter".into()]).unwrap();
        assert_eq!(c.u, 4.5);
        assert_eq!(c.noise.p2, 0.02);
        assert_eq!(c.engine, Engine::Trotter);
        assert!(parse("", &["novalue".into()]).is_err());
    }

    #[test]
    fn grids_and_times() {
        let c = parse("experiment = \"sweep-U\"", &[]).unwrap().resolve().unwrap();
        assert_eq!(c.sweep.values.len(), 21);
        assert_eq!(c.sweep.values[20], 20.0);
        let c = parse("t = 1.0\nt_step = 0.3", &[]).unwrap().resolve().unwrap();
        assert_eq!(c.times(), vec![0.0, 0.3, 0.6, 0.9, 1.0]);
    }

    #[test]
    fn resolved_round_trips_and_hash_ignores_out() {
        let c = parse("engine = \"trotter\"", &[]).unwrap().resolve().unwrap();
        let back = parse(&c.to_toml(), &[]).unwrap().resolve().unwrap();
        assert_eq!(back, c);
        let mut moved = c.clone();
        moved.out = PathBuf::from("elsewhere");
        assert_eq!(moved.hash(), c.hash());
        assert_eq!(c.hash().len(), 64);
    }
}
