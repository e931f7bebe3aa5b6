use thiserror::Error;

use crate::closures::ClosureKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("coexistence equilibrium is infeasible (need m > c and k(m - c) > c)")]
    InfeasibleEquilibrium,

    #[error("matrix is not positive semidefinite (q11 = {q11}, det = {det})")]
    NotPsd { q11: f64, det: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {lambda_min})")]
    NotPositiveDefinite { lambda_min: f64 },

    #[error("Jacobian is not Hurwitz (trace = {trace}, det = {det}); stationary LNA diagnostics not defined")]
    NotHurwitz { trace: f64, det: f64 },

    #[error("Lyapunov system is singular (det M = {det_m})")]
    SingularSystem { det_m: f64 },

    #[error("closure {0} has no integer-valued CTMC representation")]
    UnsupportedClosure(ClosureKind),

    #[error("diffusion step failed at t = {time}: {reason}")]
    StepFailure { time: f64, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("replicate {index}: {source}")]
    Replicate {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}
