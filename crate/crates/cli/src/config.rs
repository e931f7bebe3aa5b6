//! Run configuration: strict JSON schema, defaults and range checks.
//!
//! Parsing rejects unknown keys; range violations are reported with the
//! JSON pointer of the offending value. Resolution fills every default so
//! that the resolved config, echoed into the output, reproduces the run.

use serde::{Deserialize, Serialize};

use rm_hopf::closures::ClosureKind;
use rm_hopf::model::{ModelParams, State2};
use rm_hopf::sim::{InitialState, Scheme, SimConfig, Viewpoint, WelchConfig};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Equilibria,
    Regime,
    Jacobian,
    Covariance,
    Lyapunov,
    Psd,
    Ellipse,
    Precursor,
    Simulate,
    CompareClosures,
    SweepK,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub m: f64,
    pub c: f64,
    pub k: f64,
    pub omega: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<f64>,
}

/// One-sided frequency grid `omega_min..=omega_max` with `points` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyGrid {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
}

/// Symmetric quadrature grid on `[-omega_max, omega_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationBlock {
    pub omega_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KGrid {
    pub k_min: f64,
    pub k_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StartLabel {
    #[serde(rename = "k3")]
    K3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StartSpec {
    Label(StartLabel),
    State(StartState),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartState {
    pub n: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WelchBlock {
    pub segment_length: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub viewpoint: Option<Viewpoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_stride: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<StartSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub welch: Option<WelchBlock>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

/// A run configuration as written by the user, or fully resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub model: ModelBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closure: Option<ClosureKind>,
    /// Confidence level of the ellipse.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_sep: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_grid: Option<FrequencyGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integration_grid: Option<IntegrationBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_grid: Option<KGrid>,
    /// Closure pair for `compare-closures`; deltas are second minus first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closures: Option<[ClosureKind; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputBlock>,
}

pub const DEFAULT_E: f64 = 1.0;
pub const DEFAULT_P: f64 = 0.95;
pub const DEFAULT_CLOSURE: ClosureKind = ClosureKind::BernoulliCoupled;
pub const DEFAULT_SCHEME: Scheme = Scheme::Ssa;
pub const DEFAULT_WELCH_OVERLAP: f64 = 0.5;
pub const DEFAULT_SWEEP_POINTS: usize = 21;

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } | Segment::Enum { variant: key } => {
                out.push_str(&key.replace('~', "~0").replace('/', "~1"))
            }
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

/// Parses a config document. Unknown keys, wrong types and malformed JSON
/// are schema errors carrying the JSON pointer of the offending location.
pub fn parse_config(bytes: &[u8]) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|err| {
        let mut pointer = pointer_of(err.path());
        let message = err.inner().to_string();
        // An unknown key is reported at the enclosing object; point at the key.
        if let Some(key) = unknown_field(&message) {
            if !pointer.ends_with(&format!("/{key}")) {
                pointer = format!("{pointer}/{key}");
            }
        }
        CliError::Schema { pointer, message }
    })
}

fn unknown_field(message: &str) -> Option<&str> {
    let rest = message.strip_prefix("unknown field `")?;
    rest.split('`').next()
}

fn value_err(pointer: &str, message: impl Into<String>) -> CliError {
    CliError::Value {
        pointer: pointer.to_string(),
        message: message.into(),
    }
}

/// Command-line overrides applied before resolution.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<String>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn apply_overrides(&mut self, o: &Overrides) {
        if o.out.is_some() || o.format.is_some() {
            let out = self.output.get_or_insert_with(OutputBlock::default);
            if let Some(path) = &o.out {
                out.path = Some(path.clone());
            }
            if o.format.is_some() {
                out.format = o.format;
            }
        }
        if let Some(seed) = o.seed {
            if self.uses_simulation() || self.simulation.is_some() {
                self.simulation.get_or_insert_with(SimulationBlock::default).seed = Some(seed);
            }
        }
    }

    fn uses_simulation(&self) -> bool {
        self.command == Command::Simulate
    }

    /// Fills defaults and checks ranges. Defaults that depend on the model
    /// (frequency and k grids) are filled later by the command itself.
    pub fn resolve(mut self) -> Result<RunConfig, CliError> {
        self.model.e.get_or_insert(DEFAULT_E);
        self.params()?;
        self.closure.get_or_insert(DEFAULT_CLOSURE);
        let p = *self.p.get_or_insert(DEFAULT_P);
        if !(p > 0.0 && p < 1.0) {
            return Err(value_err("/p", format!("confidence level must lie in (0, 1), got {p}")));
        }
        if let Some(d) = self.d_sep {
            if !(d.is_finite() && d > 0.0) {
                return Err(value_err("/d_sep", format!("must be positive, got {d}")));
            }
        }
        if let Some(g) = &self.frequency_grid {
            if !(g.omega_min.is_finite() && g.omega_min >= 0.0) {
                return Err(value_err("/frequency_grid/omega_min", "must be finite and >= 0"));
            }
            if !(g.omega_max.is_finite() && g.omega_max > g.omega_min) {
                return Err(value_err("/frequency_grid/omega_max", "must exceed omega_min"));
            }
            if g.points < 2 {
                return Err(value_err("/frequency_grid/points", "need at least 2 points"));
            }
        }
        if let Some(g) = &self.integration_grid {
            if !(g.omega_max.is_finite() && g.omega_max > 0.0) {
                return Err(value_err("/integration_grid/omega_max", "must be positive"));
            }
            if g.points < 2 {
                return Err(value_err("/integration_grid/points", "need at least 2 points"));
            }
        }
        if let Some(g) = &self.k_grid {
            if !(g.k_min.is_finite() && g.k_min > 0.0) {
                return Err(value_err("/k_grid/k_min", "must be positive"));
            }
            if g.points == 0 {
                return Err(value_err("/k_grid/points", "need at least 1 point"));
            }
            if !(g.k_max.is_finite() && (g.k_max > g.k_min || (g.points == 1 && g.k_max == g.k_min))) {
                return Err(value_err("/k_grid/k_max", "must exceed k_min"));
            }
        }
        if self.command == Command::CompareClosures {
            self.closures.get_or_insert([ClosureKind::BernoulliCoupled, ClosureKind::SplitDiagonal]);
        }
        if self.uses_simulation() {
            self.simulation.get_or_insert_with(SimulationBlock::default);
        }
        let closure = self.closure.unwrap_or(DEFAULT_CLOSURE);
        let pair = self.closures;
        if let Some(sim) = self.simulation.as_mut() {
            resolve_simulation(sim)?;
            let scheme = sim.scheme.unwrap_or(DEFAULT_SCHEME);
            if scheme == Scheme::Ssa {
                let bad = |c: ClosureKind| c == ClosureKind::EffectiveCoupled;
                if self.command == Command::CompareClosures {
                    if let Some(i) = pair.and_then(|pr| pr.iter().position(|c| bad(*c))) {
                        return Err(value_err(
                            &format!("/closures/{i}"),
                            "the effective closure has no exact SSA representation",
                        ));
                    }
                } else if bad(closure) {
                    return Err(value_err(
                        "/closure",
                        "the effective closure has no exact SSA representation",
                    ));
                }
            }
        }
        let out = self.output.get_or_insert_with(OutputBlock::default);
        out.format.get_or_insert(Format::Json);
        Ok(self)
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        let m = &self.model;
        ModelParams::new(m.m, m.c, m.k, m.omega, m.e.unwrap_or(DEFAULT_E)).map_err(|e| match e {
            rm_hopf::Error::InvalidParameter { name, .. } => value_err(&format!("/model/{name}"), e.to_string()),
            other => CliError::Domain(other),
        })
    }

    pub fn closure(&self) -> ClosureKind {
        self.closure.unwrap_or(DEFAULT_CLOSURE)
    }

    pub fn p(&self) -> f64 {
        self.p.unwrap_or(DEFAULT_P)
    }

    pub fn format(&self) -> Format {
        self.output.as_ref().and_then(|o| o.format).unwrap_or(Format::Json)
    }

    pub fn out_path(&self) -> Option<&str> {
        self.output.as_ref().and_then(|o| o.path.as_deref())
    }

    /// Seed echoed into the output metadata.
    pub fn seed(&self) -> u64 {
        self.simulation.and_then(|s| s.seed).unwrap_or(0)
    }

    /// Simulation settings for `closure`, from a resolved config.
    pub fn sim_config(&self, closure: ClosureKind) -> Result<Option<(SimConfig, Option<WelchConfig>)>, CliError> {
        let Some(sim) = self.simulation else {
            return Ok(None);
        };
        let params = self.params()?;
        let mut cfg = SimConfig::new(params, closure, sim.scheme.unwrap_or(DEFAULT_SCHEME));
        if let Some(v) = sim.viewpoint {
            cfg.viewpoint = v;
        }
        if let Some(v) = sim.t_end {
            cfg.t_end = v;
        }
        if let Some(v) = sim.dt {
            cfg.dt = v;
        }
        if let Some(v) = sim.burn_in {
            cfg.burn_in = v;
        }
        if let Some(v) = sim.sample_stride {
            cfg.sample_stride = v;
        }
        if let Some(v) = sim.seed {
            cfg.seed = v;
        }
        if let Some(v) = sim.n_replicates {
            cfg.n_replicates = v;
        }
        cfg.initial_state = match sim.initial_state {
            Some(StartSpec::State(s)) => InitialState::At(State2::new(s.n, s.p)),
            _ => InitialState::AtK3,
        };
        let welch = sim.welch.map(|w| WelchConfig {
            segment_length: w.segment_length,
            overlap: w.overlap.unwrap_or(DEFAULT_WELCH_OVERLAP),
        });
        Ok(Some((cfg, welch)))
    }
}

fn resolve_simulation(sim: &mut SimulationBlock) -> Result<(), CliError> {
    let scheme = *sim.scheme.get_or_insert(DEFAULT_SCHEME);
    sim.viewpoint.get_or_insert(Viewpoint::Absorbed);
    let t_end = *sim.t_end.get_or_insert(1000.0);
    let dt = *sim.dt.get_or_insert(SimConfig::DEFAULT_DT);
    let burn_in = *sim.burn_in.get_or_insert(0.0);
    let stride = *sim.sample_stride.get_or_insert(0.1);
    sim.seed.get_or_insert(0);
    let reps = *sim.n_replicates.get_or_insert(1);
    let start = *sim.initial_state.get_or_insert(StartSpec::Label(StartLabel::K3));

    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(value_err("/simulation/t_end", format!("must be positive, got {t_end}")));
    }
    if !(dt > 0.0 && dt < t_end) {
        return Err(value_err("/simulation/dt", format!("must lie in (0, t_end), got {dt}")));
    }
    if !(burn_in >= 0.0 && burn_in < t_end) {
        return Err(value_err("/simulation/burn_in", format!("must lie in [0, t_end), got {burn_in}")));
    }
    if !(stride > 0.0 && stride <= t_end) {
        return Err(value_err("/simulation/sample_stride", format!("must lie in (0, t_end], got {stride}")));
    }
    if scheme != Scheme::Ssa && stride < dt {
        return Err(value_err("/simulation/sample_stride", "must not be shorter than dt"));
    }
    if reps == 0 {
        return Err(value_err("/simulation/n_replicates", "must be at least 1"));
    }
    if let StartSpec::State(s) = start {
        if !(s.n.is_finite() && s.n >= 0.0) {
            return Err(value_err("/simulation/initial_state/n", "must be finite and >= 0"));
        }
        if !(s.p.is_finite() && s.p >= 0.0) {
            return Err(value_err("/simulation/initial_state/p", "must be finite and >= 0"));
        }
    }
    if let Some(w) = sim.welch.as_mut() {
        let overlap = *w.overlap.get_or_insert(DEFAULT_WELCH_OVERLAP);
        if w.segment_length < 4 {
            return Err(value_err("/simulation/welch/segment_length", "must be at least 4"));
        }
        if !(overlap >= 0.0 && overlap < 1.0) {
            return Err(value_err("/simulation/welch/overlap", "must lie in [0, 1)"));
        }
    }
    Ok(())
}
