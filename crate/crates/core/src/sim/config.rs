use serde::{Deserialize, Serialize};

use crate::closures::ClosureKind;
use crate::error::{Error, Result};
use crate::model::{require_coexistence, ModelParams, State2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Exact Gillespie direct method on integer counts.
    #[serde(rename = "ssa")]
    Ssa,
    /// Euler–Maruyama on the density-level diffusion.
    #[serde(rename = "diffusion_em")]
    DiffusionEm,
    /// Euler–Maruyama on the linearized OU process around `K3`.
    #[serde(rename = "lna_ou")]
    LnaOu,
}

/// Boundary treatment of the diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Viewpoint {
    /// Redraw steps that leave the open quadrant, clamp as a last resort.
    #[serde(rename = "open_domain")]
    OpenDomain,
    /// Stop at the first step with `N <= 0` or `P <= 0`.
    #[serde(rename = "absorbed")]
    Absorbed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitialState {
    AtK3,
    At(State2),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub params: ModelParams,
    pub closure: ClosureKind,
    pub scheme: Scheme,
    pub viewpoint: Viewpoint,
    pub t_end: f64,
    /// Integrator step; ignored by the SSA.
    pub dt: f64,
    pub burn_in: f64,
    pub sample_stride: f64,
    pub seed: u64,
    pub n_replicates: usize,
    pub initial_state: InitialState,
}

impl SimConfig {
    pub const DEFAULT_DT: f64 = 1e-3;

    /// Defaults: `t_end = 1000`, `dt = 1e-3`, no burn-in, stride `0.1`,
    /// seed 0, one replicate, absorbed viewpoint, start at `K3`.
    pub fn new(params: ModelParams, closure: ClosureKind, scheme: Scheme) -> Self {
        Self {
            params,
            closure,
            scheme,
            viewpoint: Viewpoint::Absorbed,
            t_end: 1000.0,
            dt: Self::DEFAULT_DT,
            burn_in: 0.0,
            sample_stride: 0.1,
            seed: 0,
            n_replicates: 1,
            initial_state: InitialState::AtK3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.sample_stride > 0.0 && self.sample_stride <= self.t_end) {
            return bad(format!(
                "sample_stride must lie in (0, t_end], got {}",
                self.sample_stride
            ));
        }
        if !(self.burn_in >= 0.0 && self.burn_in < self.t_end) {
            return bad(format!("burn_in must lie in [0, t_end), got {}", self.burn_in));
        }
        if self.scheme != Scheme::Ssa && !(self.dt > 0.0 && self.dt < self.t_end) {
            return bad(format!("dt must lie in (0, t_end), got {}", self.dt));
        }
        if self.n_replicates == 0 {
            return bad("n_replicates must be at least 1".into());
        }
        if self.scheme == Scheme::Ssa && self.closure == ClosureKind::EffectiveCoupled {
            return Err(Error::UnsupportedClosure(self.closure));
        }
        if let InitialState::At(x) = self.initial_state {
            if !(x.n.is_finite() && x.p.is_finite()) {
                return bad("initial state must be finite".into());
            }
            if self.scheme != Scheme::LnaOu && !x.in_closed_quadrant() {
                return bad(format!("initial state ({}, {}) outside the quadrant", x.n, x.p));
            }
        }
        Ok(())
    }

    /// Initial density state. `AtK3` needs a feasible coexistence
    /// equilibrium.
    pub fn initial_density(&self) -> Result<State2> {
        match self.initial_state {
            InitialState::AtK3 => require_coexistence(&self.params),
            InitialState::At(x) => Ok(x),
        }
    }

    /// Integrator steps between stored samples (at least one).
    pub(crate) fn steps_per_sample(&self) -> u64 {
        ((self.sample_stride / self.dt).round() as u64).max(1)
    }

    pub(crate) fn total_steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }

    /// Number of stride-grid sample times in `[0, t_end]`.
    pub(crate) fn sample_count(&self) -> usize {
        (self.t_end / self.sample_stride * (1.0 + 1e-12)).floor() as usize + 1
    }
}
