//! Gillespie direct method on integer prey/predator counts.

use rand::Rng;
use rand_distr::Exp1;

use super::rng::SimRng;
use super::{Absorption, Boundary, Coordinates, SimConfig, Trajectory};
use crate::closures::ssa_channels;
use crate::error::{Error, Result};
use crate::model::State2;

/// Simulates replicate 0 of `config`.
pub fn ssa_simulate(config: &SimConfig) -> Result<Trajectory> {
    let mut rng = super::rng::replicate_rng(config.seed, 0);
    run(config, &mut rng)
}

/// One SSA trajectory, sampled on the stride grid with the state holding
/// since the last event. The run stops at the first event leaving either
/// population at zero: prey cannot regrow from `N = 0` and predators cannot
/// be born from `P = 0`.
pub(crate) fn run(config: &SimConfig, rng: &mut SimRng) -> Result<Trajectory> {
    config.validate()?;
    let params = &config.params;
    let channels = ssa_channels(params, config.closure)?;
    let channels = channels.channels();
    let omega = params.omega();

    let x0 = config.initial_density()?;
    let mut n = (x0.n * omega).round();
    let mut p = (x0.p * omega).round();
    if !(n >= 0.0 && p >= 0.0) {
        return Err(Error::InvalidConfig("negative initial counts".into()));
    }

    let n_samples = config.sample_count();
    let stride = config.sample_stride;
    let mut traj = Trajectory::new(Coordinates::Density, n_samples);
    let mut rates = vec![0.0; channels.len()];
    let mut next_sample = 0usize;
    let mut t = 0.0;

    loop {
        if let Some(boundary) = Boundary::classify(n == 0.0, p == 0.0) {
            traj.absorbed_at = Some(Absorption { time: t, boundary });
            break;
        }
        let mut total = 0.0;
        for (rate, ch) in rates.iter_mut().zip(channels) {
            *rate = ch.intensity.count_rate(params, n, p);
            total += *rate;
        }
        let wait: f64 = rng.sample(Exp1);
        let t_next = t + wait / total;
        while next_sample < n_samples {
            let ts = next_sample as f64 * stride;
            if ts >= t_next {
                break;
            }
            traj.push(ts, State2::new(n / omega, p / omega));
            next_sample += 1;
        }
        if next_sample == n_samples {
            break;
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = channels.len() - 1;
        for (i, rate) in rates.iter().enumerate() {
            acc += rate;
            if target < acc {
                chosen = i;
                break;
            }
        }
        let inc = channels[chosen].increment;
        n += inc[0];
        p += inc[1];
        t = t_next;
        traj.steps += 1;
    }
    Ok(traj)
}
