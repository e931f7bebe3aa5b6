//! Demographic noise near the Hopf bifurcation of the Rosenzweig–MacArthur
//! predator–prey model.
//!
//! The crate builds the deterministic model and its coexistence equilibrium
//! `K3`, the diffusion covariance under three predation-noise closures,
//! the linear-noise diagnostics at `K3` (stationary covariance, spectral
//! matrix, confidence ellipse, precursor indicator), and stochastic
//! simulators used to check them.

pub mod closures;
pub mod error;
pub mod lna;
pub mod matrix;
pub mod model;
pub mod sim;

pub use closures::{full_covariance, ssa_channels, ClosureKind};
pub use error::{Error, Result};
pub use lna::{
    ellipse_geometry, precursor_indicator, psd_matrix, solve_lyapunov, ssf_pipeline,
    EllipseGeometry, PrecursorReport, SsfOutcome, SsfReport,
};
pub use matrix::{Mat2, SymMatrix2};
pub use model::{
    classify_regime, coexistence_equilibrium, hopf_threshold, jacobian_at_k3, ModelParams,
    RegimeLabel, State2,
};
