//! Demographic-noise closures.
//!
//! Every closure shares the non-predation channels (prey birth, prey
//! competition death, predator death) and differs only in how predation
//! events are resolved:
//!
//! * [`ClosureKind::BernoulliCoupled`]: each encounter removes a prey and,
//!   with probability `e`, adds a predator. Channels `(-1,+1)` at rate
//!   `e f_pred` and `(-1,0)` at rate `(1-e) f_pred`.
//! * [`ClosureKind::EffectiveCoupled`]: a single diffusion-level channel with
//!   increment `(-1, e)`. Not a CTMC jump.
//! * [`ClosureKind::SplitDiagonal`]: independent prey removal `(-1,0)` at
//!   `f_pred` and predator birth `(0,+1)` at `e f_pred`.
//!
//! The density-level diffusion covariance is
//! `a(x) = (1/Ω) Σ_k f_k(x) ν_k ν_kᵀ`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SymMatrix2;
use crate::model::{ModelParams, State2};

pub use crate::matrix::factorize_covariance;
pub use crate::model::predation_intensity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClosureKind {
    #[serde(rename = "bernoulli")]
    BernoulliCoupled,
    #[serde(rename = "effective")]
    EffectiveCoupled,
    #[serde(rename = "split")]
    SplitDiagonal,
}

impl ClosureKind {
    pub const ALL: [ClosureKind; 3] = [
        ClosureKind::BernoulliCoupled,
        ClosureKind::EffectiveCoupled,
        ClosureKind::SplitDiagonal,
    ];

    /// Short name accepted on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            ClosureKind::BernoulliCoupled => "bernoulli",
            ClosureKind::EffectiveCoupled => "effective",
            ClosureKind::SplitDiagonal => "split",
        }
    }

    /// True for the closures that carry predation-induced cross-covariance.
    pub fn is_coupled(&self) -> bool {
        !matches!(self, ClosureKind::SplitDiagonal)
    }
}

impl fmt::Display for ClosureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClosureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bernoulli" => Ok(ClosureKind::BernoulliCoupled),
            "effective" => Ok(ClosureKind::EffectiveCoupled),
            "split" => Ok(ClosureKind::SplitDiagonal),
            other => Err(Error::Domain(format!(
                "unknown closure `{other}` (expected bernoulli | effective | split)"
            ))),
        }
    }
}

/// Non-predation covariance `(1/Ω) diag(N + N²/k, c P)`.
pub fn base_covariance(params: &ModelParams, x: State2) -> SymMatrix2 {
    let inv = 1.0 / params.omega();
    SymMatrix2::diag(
        (x.n + x.n * x.n / params.k()) * inv,
        params.c() * x.p * inv,
    )
}

/// Predation contribution `(f_pred/Ω) M` for the closure's shape matrix `M`.
pub fn predation_covariance(params: &ModelParams, x: State2, closure: ClosureKind) -> SymMatrix2 {
    let e = params.e();
    let shape = match closure {
        ClosureKind::BernoulliCoupled => SymMatrix2::new(1.0, -e, e),
        ClosureKind::EffectiveCoupled => SymMatrix2::new(1.0, -e, e * e),
        ClosureKind::SplitDiagonal => SymMatrix2::new(1.0, 0.0, e),
    };
    shape.scale(predation_intensity(params, x) / params.omega())
}

/// Full diffusion covariance `a(x) = a0(x) + a_pred(x)`.
pub fn full_covariance(params: &ModelParams, x: State2, closure: ClosureKind) -> SymMatrix2 {
    base_covariance(params, x).add(&predation_covariance(params, x, closure))
}

/// Density-level intensity of a channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Intensity {
    /// `N`
    PreyBirth,
    /// `N² / k`
    PreyCompetition,
    /// `c P`
    PredatorDeath,
    /// `fraction · m N P / (1 + N)`
    Predation { fraction: f64 },
}

impl Intensity {
    pub fn density(&self, params: &ModelParams, x: State2) -> f64 {
        match *self {
            Intensity::PreyBirth => x.n,
            Intensity::PreyCompetition => x.n * x.n / params.k(),
            Intensity::PredatorDeath => params.c() * x.p,
            Intensity::Predation { fraction } => fraction * predation_intensity(params, x),
        }
    }

    /// Count-level propensity `Ω f(counts / Ω)`, written out so that the
    /// population sizes enter without rescaling.
    pub fn count_rate(&self, params: &ModelParams, n: f64, p: f64) -> f64 {
        let omega = params.omega();
        match *self {
            Intensity::PreyBirth => n,
            Intensity::PreyCompetition => n * n / (params.k() * omega),
            Intensity::PredatorDeath => params.c() * p,
            Intensity::Predation { fraction } => fraction * params.m() * n * p / (omega + n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Channel {
    pub label: &'static str,
    /// Stoichiometric increment. Integer-valued for every CTMC channel.
    pub increment: [f64; 2],
    pub intensity: Intensity,
}

/// Ordered channel list of one closure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelSet {
    channels: Vec<Channel>,
    closure: ClosureKind,
}

impl ChannelSet {
    /// Density-level channel set of any closure, including zero-rate ones.
    pub fn density_level(params: &ModelParams, closure: ClosureKind) -> Self {
        let e = params.e();
        let mut channels = vec![
            Channel {
                label: "prey_birth",
                increment: [1.0, 0.0],
                intensity: Intensity::PreyBirth,
            },
            Channel {
                label: "prey_competition",
                increment: [-1.0, 0.0],
                intensity: Intensity::PreyCompetition,
            },
            Channel {
                label: "predator_death",
                increment: [0.0, -1.0],
                intensity: Intensity::PredatorDeath,
            },
        ];
        match closure {
            ClosureKind::BernoulliCoupled => {
                channels.push(Channel {
                    label: "predation_conversion",
                    increment: [-1.0, 1.0],
                    intensity: Intensity::Predation { fraction: e },
                });
                channels.push(Channel {
                    label: "predation_no_conversion",
                    increment: [-1.0, 0.0],
                    intensity: Intensity::Predation { fraction: 1.0 - e },
                });
            }
            ClosureKind::EffectiveCoupled => channels.push(Channel {
                label: "predation_effective",
                increment: [-1.0, e],
                intensity: Intensity::Predation { fraction: 1.0 },
            }),
            ClosureKind::SplitDiagonal => {
                channels.push(Channel {
                    label: "predation_prey_removal",
                    increment: [-1.0, 0.0],
                    intensity: Intensity::Predation { fraction: 1.0 },
                });
                channels.push(Channel {
                    label: "predation_predator_birth",
                    increment: [0.0, 1.0],
                    intensity: Intensity::Predation { fraction: e },
                });
            }
        }
        Self { channels, closure }
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn closure(&self) -> ClosureKind {
        self.closure
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// `Σ f_k(x) ν_k`. Equals the model drift when `e = 1`; for `e < 1` the
    /// predator gain is `e f_pred` instead of `f_pred`.
    pub fn drift(&self, params: &ModelParams, x: State2) -> [f64; 2] {
        self.channels.iter().fold([0.0, 0.0], |acc, ch| {
            let f = ch.intensity.density(params, x);
            [acc[0] + f * ch.increment[0], acc[1] + f * ch.increment[1]]
        })
    }

    /// `(1/Ω) Σ f_k(x) ν_k ν_kᵀ`.
    pub fn covariance(&self, params: &ModelParams, x: State2) -> SymMatrix2 {
        let sum = self.channels.iter().fold(SymMatrix2::zero(), |acc, ch| {
            let f = ch.intensity.density(params, x);
            let [a, b] = ch.increment;
            acc.add(&SymMatrix2::new(f * a * a, f * a * b, f * b * b))
        });
        sum.scale(1.0 / params.omega())
    }
}

/// Integer-increment channel set for the exact CTMC. Channels whose rate is
/// identically zero (`(1-e) f_pred` at `e = 1`) are dropped.
pub fn ssa_channels(params: &ModelParams, closure: ClosureKind) -> Result<ChannelSet> {
    if closure == ClosureKind::EffectiveCoupled {
        return Err(Error::UnsupportedClosure(closure));
    }
    let mut set = ChannelSet::density_level(params, closure);
    set.channels
        .retain(|ch| !matches!(ch.intensity, Intensity::Predation { fraction } if fraction == 0.0));
    Ok(set)
}
