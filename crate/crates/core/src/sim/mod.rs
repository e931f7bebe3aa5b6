//! Stochastic simulation: exact Gillespie SSA on the population CTMC,
//! Euler–Maruyama integration of the density diffusion, OU integration of
//! the LNA, and the estimators used to compare them with the analytic
//! diagnostics.

mod config;
mod ensemble;
mod estimate;
pub mod rng;
mod sde;
mod ssa;

pub use config::{InitialState, Scheme, SimConfig, Viewpoint};
pub use ensemble::{ensemble_run, simulate_replicate, EnsembleRun};
pub use estimate::{
    estimate_psd, estimate_psd_ensemble, estimate_stationary_covariance, extinction_stats,
    survival_curve, EnsembleStats, ExtinctionStats, MomentAccumulator, PsdEstimate, WelchConfig,
};
pub use sde::{ou_simulate, ou_simulate_linear, sde_simulate, OPEN_DOMAIN_FLOOR, OPEN_DOMAIN_MAX_REDRAWS};
pub use ssa::ssa_simulate;

use serde::{Deserialize, Serialize};

use crate::model::State2;

/// Extinction boundary reached by an absorbed trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Boundary {
    /// `N = 0`, `P > 0`
    PreyAxis,
    /// `P = 0`, `N > 0`
    PredatorAxis,
    /// Both coordinates zero.
    Origin,
}

impl Boundary {
    /// Boundary of a state with at least one non-positive coordinate.
    pub fn classify(n_out: bool, p_out: bool) -> Option<Boundary> {
        match (n_out, p_out) {
            (true, true) => Some(Boundary::Origin),
            (true, false) => Some(Boundary::PreyAxis),
            (false, true) => Some(Boundary::PredatorAxis),
            (false, false) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Absorption {
    pub time: f64,
    pub boundary: Boundary,
}

/// Coordinates of stored states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coordinates {
    /// Densities `(N, P)`; SSA counts are divided by `Ω`.
    Density,
    /// Deviations `x - K3` (OU runs).
    Deviation,
}

/// A sampled path on the uniform stride grid. No sample is stored at or
/// after the absorption time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State2>,
    pub coordinates: Coordinates,
    pub absorbed_at: Option<Absorption>,
    /// SSA events fired or integrator steps taken.
    pub steps: u64,
    /// Open-domain steps that needed a fresh Gaussian draw.
    pub redraw_count: u64,
    /// Open-domain steps that fell back to clamping at the floor.
    pub clamp_count: u64,
}

impl Trajectory {
    pub(crate) fn new(coordinates: Coordinates, capacity: usize) -> Self {
        Self {
            times: Vec::with_capacity(capacity),
            states: Vec::with_capacity(capacity),
            coordinates,
            absorbed_at: None,
            steps: 0,
            redraw_count: 0,
            clamp_count: 0,
        }
    }

    pub(crate) fn push(&mut self, t: f64, x: State2) {
        self.times.push(t);
        self.states.push(x);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn survived(&self) -> bool {
        self.absorbed_at.is_none()
    }
}
