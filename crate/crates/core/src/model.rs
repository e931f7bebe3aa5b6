//! Deterministic Rosenzweig–MacArthur backbone in nondimensional form:
//!
//! ```text
//! dN/dt = N (1 - N/k) - m N P / (1 + N)
//! dP/dt = P (-c + m N / (1 + N))
//! ```
//!
//! Equilibria, Jacobians and the enrichment-driven Hopf threshold
//! `k_H = (m + c) / (m - c)` are all evaluated in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Mat2;

/// Relative half-width of the band around `k_H` classified as on-threshold.
pub const THRESHOLD_RTOL: f64 = 1e-12;

/// Jacobian of the drift. Entries are row-major; trace and determinant are
/// always derived.
pub type Jacobian2 = Mat2;

/// Scalar model parameters.
///
/// * `m` maximal predation / assimilation rate
/// * `c` predator mortality
/// * `k` scaled prey carrying capacity
/// * `omega` system size (population scale)
/// * `e` conversion efficiency in `(0, 1]`
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    m: f64,
    c: f64,
    k: f64,
    omega: f64,
    e: f64,
}

impl ModelParams {
    pub fn new(m: f64, c: f64, k: f64, omega: f64, e: f64) -> Result<Self> {
        fn positive(name: &'static str, value: f64) -> Result<()> {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be a finite positive number",
                })
            }
        }
        positive("m", m)?;
        positive("c", c)?;
        positive("k", k)?;
        positive("omega", omega)?;
        if !(e > 0.0 && e <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "e",
                value: e,
                reason: "must lie in (0, 1]",
            });
        }
        Ok(Self { m, c, k, omega, e })
    }

    /// Parameters with unit conversion efficiency.
    pub fn with_unit_efficiency(m: f64, c: f64, k: f64, omega: f64) -> Result<Self> {
        Self::new(m, c, k, omega, 1.0)
    }

    pub fn m(&self) -> f64 {
        self.m
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn k(&self) -> f64 {
        self.k
    }
    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn e(&self) -> f64 {
        self.e
    }

    pub fn with_k(&self, k: f64) -> Result<Self> {
        Self::new(self.m, self.c, k, self.omega, self.e)
    }

    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        Self::new(self.m, self.c, self.k, omega, self.e)
    }

    pub fn with_e(&self, e: f64) -> Result<Self> {
        Self::new(self.m, self.c, self.k, self.omega, e)
    }

    /// `m > c` and `k (m - c) > c`.
    pub fn coexistence_feasible(&self) -> bool {
        self.m > self.c && self.k * (self.m - self.c) > self.c
    }
}

/// Prey/predator densities `(N, P)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State2 {
    pub n: f64,
    pub p: f64,
}

impl State2 {
    pub const fn new(n: f64, p: f64) -> Self {
        Self { n, p }
    }

    pub fn in_closed_quadrant(&self) -> bool {
        self.n >= 0.0 && self.p >= 0.0
    }

    pub fn in_open_quadrant(&self) -> bool {
        self.n > 0.0 && self.p > 0.0
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.n, self.p]
    }
}

impl From<[f64; 2]> for State2 {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumKind {
    Origin,
    PreyOnly,
    Coexistence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equilibrium {
    pub kind: EquilibriumKind,
    pub state: State2,
}

/// The coexistence equilibrium `K3 = (N*, P*)`, or `None` when it is not in
/// the open quadrant.
pub fn coexistence_equilibrium(params: &ModelParams) -> Option<Equilibrium> {
    if !params.coexistence_feasible() {
        return None;
    }
    let (m, c, k) = (params.m, params.c, params.k);
    let gap = m - c;
    Some(Equilibrium {
        kind: EquilibriumKind::Coexistence,
        state: State2::new(c / gap, (k * gap - c) / (k * gap * gap)),
    })
}

pub fn require_coexistence(params: &ModelParams) -> Result<State2> {
    coexistence_equilibrium(params)
        .map(|eq| eq.state)
        .ok_or(Error::InfeasibleEquilibrium)
}

/// All equilibria in the closed quadrant: origin, prey-only `(k, 0)` and,
/// when feasible, coexistence.
pub fn equilibria(params: &ModelParams) -> Vec<Equilibrium> {
    let mut out = vec![
        Equilibrium {
            kind: EquilibriumKind::Origin,
            state: State2::new(0.0, 0.0),
        },
        Equilibrium {
            kind: EquilibriumKind::PreyOnly,
            state: State2::new(params.k, 0.0),
        },
    ];
    out.extend(coexistence_equilibrium(params));
    out
}

/// `k_H = (m + c) / (m - c)`; undefined for `m <= c`.
pub fn hopf_threshold(params: &ModelParams) -> Result<f64> {
    if params.m <= params.c {
        return Err(Error::Domain(format!(
            "Hopf threshold undefined for m = {} <= c = {}",
            params.m, params.c
        )));
    }
    Ok((params.m + params.c) / (params.m - params.c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeLabel {
    #[serde(rename = "Lambda2_Stable")]
    Lambda2Stable,
    #[serde(rename = "Lambda1_PostHopf")]
    Lambda1PostHopf,
    OnThreshold,
    Infeasible,
}

impl RegimeLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeLabel::Lambda2Stable => "Lambda2_Stable",
            RegimeLabel::Lambda1PostHopf => "Lambda1_PostHopf",
            RegimeLabel::OnThreshold => "OnThreshold",
            RegimeLabel::Infeasible => "Infeasible",
        }
    }
}

/// Regime classification. `hopf_k` and `margin = k_H - k` are absent only
/// when `m <= c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regime {
    pub label: RegimeLabel,
    pub hopf_k: Option<f64>,
    pub margin: Option<f64>,
}

pub fn classify_regime(params: &ModelParams) -> Regime {
    let hopf_k = hopf_threshold(params).ok();
    let margin = hopf_k.map(|kh| kh - params.k);
    let label = match hopf_k {
        _ if !params.coexistence_feasible() => RegimeLabel::Infeasible,
        Some(kh) if (params.k - kh).abs() <= THRESHOLD_RTOL * kh => RegimeLabel::OnThreshold,
        Some(kh) if params.k < kh => RegimeLabel::Lambda2Stable,
        Some(_) => RegimeLabel::Lambda1PostHopf,
        None => RegimeLabel::Infeasible,
    };
    Regime {
        label,
        hopf_k,
        margin,
    }
}

/// Predation intensity `m N P / (1 + N)`.
pub fn predation_intensity(params: &ModelParams, x: State2) -> f64 {
    params.m * x.n * x.p / (1.0 + x.n)
}

/// Deterministic drift `b(x)`.
pub fn drift(params: &ModelParams, x: State2) -> [f64; 2] {
    let pred = predation_intensity(params, x);
    [
        x.n * (1.0 - x.n / params.k) - pred,
        x.p * (-params.c + params.m * x.n / (1.0 + x.n)),
    ]
}

/// Jacobian of the drift at an arbitrary state.
pub fn jacobian(params: &ModelParams, x: State2) -> Jacobian2 {
    let (m, c, k) = (params.m, params.c, params.k);
    let one_n = 1.0 + x.n;
    let sat = m * x.p / (one_n * one_n);
    Mat2::new(
        1.0 - 2.0 * x.n / k - sat,
        -m * x.n / one_n,
        sat,
        -c + m * x.n / one_n,
    )
}

/// Jacobian at `K3` from its closed form. The `(2,2)` entry is identically
/// zero and `trace = (c / (k m)) (k - k_H)`.
pub fn jacobian_at_k3(params: &ModelParams) -> Result<Jacobian2> {
    if !params.coexistence_feasible() {
        return Err(Error::InfeasibleEquilibrium);
    }
    let (m, c, k) = (params.m, params.c, params.k);
    let gap = m - c;
    Ok(Mat2::new(
        c * (k * gap - (m + c)) / (k * m * gap),
        -c,
        (k * gap - c) / (k * m),
        0.0,
    ))
}
