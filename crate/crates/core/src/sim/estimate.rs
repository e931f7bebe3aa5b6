//! Estimators over simulated trajectories: pooled stationary moments,
//! Welch periodograms and extinction statistics.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use super::{Boundary, Trajectory};
use crate::error::{Error, Result};
use crate::matrix::SymMatrix2;
use crate::model::State2;

/// Count, mean and centered second moment of a 2-vector sample. Merging
/// follows the pairwise update of Chan, Golub and LeVeque.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct MomentAccumulator {
    pub count: u64,
    pub mean: [f64; 2],
    /// Sum of centered outer products.
    pub m2: SymMatrix2,
}

impl MomentAccumulator {
    /// Two-pass moments of a slice.
    pub fn from_states(states: &[State2]) -> Self {
        if states.is_empty() {
            return Self::default();
        }
        let n = states.len() as f64;
        let (sn, sp) = states
            .iter()
            .fold((0.0, 0.0), |(a, b), s| (a + s.n, b + s.p));
        let mean = [sn / n, sp / n];
        let m2 = states.iter().fold(SymMatrix2::zero(), |acc, s| {
            let dn = s.n - mean[0];
            let dp = s.p - mean[1];
            acc.add(&SymMatrix2::new(dn * dn, dn * dp, dp * dp))
        });
        Self {
            count: states.len() as u64,
            mean,
            m2,
        }
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta = [other.mean[0] - self.mean[0], other.mean[1] - self.mean[1]];
        let w = na * nb / n;
        Self {
            count: self.count + other.count,
            mean: [
                self.mean[0] + delta[0] * nb / n,
                self.mean[1] + delta[1] * nb / n,
            ],
            m2: self.m2.add(&other.m2).add(&SymMatrix2::new(
                delta[0] * delta[0] * w,
                delta[0] * delta[1] * w,
                delta[1] * delta[1] * w,
            )),
        }
    }

    /// Unbiased (`n - 1`) sample covariance.
    pub fn covariance(&self) -> Option<SymMatrix2> {
        (self.count >= 2).then(|| self.m2.scale(1.0 / (self.count - 1) as f64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub sample_mean: [f64; 2],
    pub sample_cov: SymMatrix2,
    pub n_samples: u64,
    /// Replicates contributing samples.
    pub replicates_used: usize,
    pub n_replicates: usize,
    pub survival_fraction: f64,
    pub mean_absorption_time: Option<f64>,
    /// True when absorbed replicates were excluded, i.e. the moments are
    /// conditioned on survival to the end of the run.
    pub survival_conditioned: bool,
}

fn post_burn_in(traj: &Trajectory, burn_in: f64) -> &[State2] {
    let start = traj.times.partition_point(|&t| t < burn_in);
    &traj.states[start..]
}

/// Pooled unbiased mean and covariance over samples with `t >= burn_in`.
/// Absorbed replicates are excluded (survival conditioning). Per-replicate
/// moments are merged in replicate order.
pub fn estimate_stationary_covariance(trajs: &[Trajectory], burn_in: f64) -> Result<EnsembleStats> {
    let survivors: Vec<&Trajectory> = trajs.iter().filter(|t| t.survived()).collect();
    let pooled = survivors
        .iter()
        .map(|t| MomentAccumulator::from_states(post_burn_in(t, burn_in)))
        .fold(MomentAccumulator::default(), |acc, m| acc.merge(&m));
    let sample_cov = pooled.covariance().ok_or_else(|| {
        Error::InsufficientData(format!(
            "{} post-burn-in samples from {} surviving replicates (need >= 2)",
            pooled.count,
            survivors.len()
        ))
    })?;
    let ext = extinction_stats(trajs);
    Ok(EnsembleStats {
        sample_mean: pooled.mean,
        sample_cov,
        n_samples: pooled.count,
        replicates_used: survivors.len(),
        n_replicates: trajs.len(),
        survival_fraction: ext.survival_fraction,
        mean_absorption_time: ext.mean_absorption_time,
        survival_conditioned: survivors.len() < trajs.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelchConfig {
    /// Samples per segment.
    pub segment_length: usize,
    /// Fractional overlap of consecutive segments, in `[0, 1)`.
    pub overlap: f64,
}

impl Default for WelchConfig {
    fn default() -> Self {
        Self {
            segment_length: 4096,
            overlap: 0.5,
        }
    }
}

impl WelchConfig {
    fn hop(&self) -> usize {
        let shift = (self.segment_length as f64 * (1.0 - self.overlap)).round() as usize;
        shift.max(1)
    }

    fn validate(&self) -> Result<()> {
        if self.segment_length < 4 {
            return Err(Error::InvalidConfig("Welch segment_length must be >= 4".into()));
        }
        if !(self.overlap >= 0.0 && self.overlap < 1.0) {
            return Err(Error::InvalidConfig("Welch overlap must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Welch estimate of the two-sided spectral matrix at non-negative
/// frequencies `ω_k = 2πk / (L Δ)`, `k = 0..=L/2`.
///
/// Each segment is mean-removed and Hann-windowed (periodic form); the
/// periodogram `Δ / Σw² · X_a(ω) conj(X_b(ω))` targets
/// `S(ω) = ∫ e^{-iωτ} R(τ) dτ`, so white noise of variance `σ²` sampled at
/// interval `Δ` gives a flat `σ² Δ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsdEstimate {
    pub omega_grid: Vec<f64>,
    pub s_nn: Vec<f64>,
    pub s_pp: Vec<f64>,
    pub s_np: Vec<Complex64>,
    pub segment_count: usize,
    pub sample_interval: f64,
}

fn sample_interval(traj: &Trajectory) -> Result<f64> {
    if traj.times.len() < 2 {
        return Err(Error::InsufficientData("trajectory has fewer than 2 samples".into()));
    }
    let dt = traj.times[1] - traj.times[0];
    let uniform = traj
        .times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.max(w[1].abs() * 1e-6));
    if !(dt > 0.0) || !uniform {
        return Err(Error::InsufficientData("trajectory is not uniformly sampled".into()));
    }
    Ok(dt)
}

struct WelchAccumulator {
    length: usize,
    window: Vec<f64>,
    window_power: f64,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    nn: Vec<f64>,
    pp: Vec<f64>,
    np: Vec<Complex64>,
    segments: usize,
}

impl WelchAccumulator {
    fn new(length: usize) -> Self {
        let window: Vec<f64> = (0..length)
            .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / length as f64).cos()))
            .collect();
        let window_power = window.iter().map(|w| w * w).sum();
        let bins = length / 2 + 1;
        Self {
            length,
            window,
            window_power,
            fft: FftPlanner::new().plan_fft_forward(length),
            nn: vec![0.0; bins],
            pp: vec![0.0; bins],
            np: vec![Complex64::new(0.0, 0.0); bins],
            segments: 0,
        }
    }

    fn transform(&self, values: impl Iterator<Item = f64> + Clone) -> Vec<Complex64> {
        let mean = values.clone().sum::<f64>() / self.length as f64;
        let mut buf: Vec<Complex64> = values
            .zip(&self.window)
            .map(|(v, w)| Complex64::new((v - mean) * w, 0.0))
            .collect();
        self.fft.process(&mut buf);
        buf
    }

    fn add_series(&mut self, states: &[State2], hop: usize) {
        let mut start = 0;
        while start + self.length <= states.len() {
            let seg = &states[start..start + self.length];
            let xn = self.transform(seg.iter().map(|s| s.n));
            let xp = self.transform(seg.iter().map(|s| s.p));
            for k in 0..self.nn.len() {
                self.nn[k] += xn[k].norm_sqr();
                self.pp[k] += xp[k].norm_sqr();
                self.np[k] += xn[k] * xp[k].conj();
            }
            self.segments += 1;
            start += hop;
        }
    }

    fn finish(self, interval: f64) -> Result<PsdEstimate> {
        if self.segments < 2 {
            return Err(Error::InsufficientData(format!(
                "Welch estimate needs >= 2 segments, got {}",
                self.segments
            )));
        }
        let norm = interval / (self.window_power * self.segments as f64);
        let d_omega = 2.0 * PI / (self.length as f64 * interval);
        Ok(PsdEstimate {
            omega_grid: (0..self.nn.len()).map(|k| k as f64 * d_omega).collect(),
            s_nn: self.nn.iter().map(|v| v * norm).collect(),
            s_pp: self.pp.iter().map(|v| v * norm).collect(),
            s_np: self.np.iter().map(|v| v * norm).collect(),
            segment_count: self.segments,
            sample_interval: interval,
        })
    }
}

/// Welch estimate from one trajectory, using samples with `t >= burn_in`.
pub fn estimate_psd(traj: &Trajectory, burn_in: f64, welch: &WelchConfig) -> Result<PsdEstimate> {
    estimate_psd_ensemble(std::slice::from_ref(traj), burn_in, welch)
}

/// Welch estimate averaged over every segment of every surviving
/// trajectory.
pub fn estimate_psd_ensemble(
    trajs: &[Trajectory],
    burn_in: f64,
    welch: &WelchConfig,
) -> Result<PsdEstimate> {
    welch.validate()?;
    let survivors: Vec<&Trajectory> = trajs.iter().filter(|t| t.survived()).collect();
    let first = survivors
        .first()
        .ok_or_else(|| Error::InsufficientData("no surviving trajectory".into()))?;
    let interval = sample_interval(first)?;
    let mut acc = WelchAccumulator::new(welch.segment_length);
    for traj in survivors {
        let dt = sample_interval(traj)?;
        if (dt - interval).abs() > 1e-9 * interval {
            return Err(Error::InsufficientData("replicates use different sample intervals".into()));
        }
        acc.add_series(post_burn_in(traj, burn_in), welch.hop());
    }
    acc.finish(interval)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtinctionStats {
    pub n_replicates: usize,
    pub survivors: usize,
    pub survival_fraction: f64,
    pub mean_absorption_time: Option<f64>,
    pub median_absorption_time: Option<f64>,
    pub prey_axis: usize,
    pub predator_axis: usize,
    pub origin: usize,
}

/// Survival fraction at the end of the run and absorption-time summary of
/// the absorbed replicates.
pub fn extinction_stats(trajs: &[Trajectory]) -> ExtinctionStats {
    let mut times: Vec<f64> = Vec::new();
    let (mut prey, mut pred, mut origin) = (0, 0, 0);
    for abs in trajs.iter().filter_map(|t| t.absorbed_at) {
        times.push(abs.time);
        match abs.boundary {
            Boundary::PreyAxis => prey += 1,
            Boundary::PredatorAxis => pred += 1,
            Boundary::Origin => origin += 1,
        }
    }
    let n = trajs.len();
    let survivors = n - times.len();
    times.sort_by(f64::total_cmp);
    let mean = (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64);
    let median = (!times.is_empty()).then(|| {
        let mid = times.len() / 2;
        if times.len() % 2 == 1 {
            times[mid]
        } else {
            0.5 * (times[mid - 1] + times[mid])
        }
    });
    ExtinctionStats {
        n_replicates: n,
        survivors,
        survival_fraction: if n == 0 { 1.0 } else { survivors as f64 / n as f64 },
        mean_absorption_time: mean,
        median_absorption_time: median,
        prey_axis: prey,
        predator_axis: pred,
        origin,
    }
}

/// Fraction of replicates not yet absorbed at each query time.
pub fn survival_curve(trajs: &[Trajectory], times: &[f64]) -> Vec<f64> {
    let n = trajs.len().max(1) as f64;
    times
        .iter()
        .map(|&t| {
            trajs
                .iter()
                .filter(|tr| tr.absorbed_at.is_none_or(|a| a.time > t))
                .count() as f64
                / n
        })
        .collect()
}
