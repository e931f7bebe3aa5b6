//! Replicate ensembles. Replicate `i` draws from its own stream seeded by
//! `replicate_seed(seed, i)`, so results do not depend on the thread count.

use rayon::prelude::*;
use serde::Serialize;

use super::estimate::{
    estimate_psd_ensemble, estimate_stationary_covariance, extinction_stats, EnsembleStats,
    ExtinctionStats, PsdEstimate, WelchConfig,
};
use super::rng::{replicate_rng, RNG_NAME};
use super::{sde, ssa, Scheme, SimConfig, Trajectory};
use crate::error::{Error, Result};

/// Runs replicate `index` of `config`.
pub fn simulate_replicate(config: &SimConfig, index: u64) -> Result<Trajectory> {
    let mut rng = replicate_rng(config.seed, index);
    match config.scheme {
        Scheme::Ssa => ssa::run(config, &mut rng),
        Scheme::DiffusionEm => sde::run_diffusion(config, &mut rng),
        Scheme::LnaOu => sde::run_ou(config, &mut rng),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleRun {
    pub trajectories: Vec<Trajectory>,
    /// `None` when fewer than two post-burn-in samples survive.
    pub stats: Option<EnsembleStats>,
    pub extinction: ExtinctionStats,
    pub psd: Option<PsdEstimate>,
    pub total_redraws: u64,
    pub total_clamps: u64,
    pub rng_name: &'static str,
}

/// Runs all replicates in parallel and aggregates them in replicate order.
/// A Welch estimate is computed when `welch` is given; too little data for
/// it is an error.
pub fn ensemble_run(config: &SimConfig, welch: Option<&WelchConfig>) -> Result<EnsembleRun> {
    config.validate()?;
    let trajectories = (0..config.n_replicates as u64)
        .into_par_iter()
        .map(|i| {
            simulate_replicate(config, i).map_err(|e| Error::Replicate {
                index: i as usize,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let stats = match estimate_stationary_covariance(&trajectories, config.burn_in) {
        Ok(s) => Some(s),
        Err(Error::InsufficientData(_)) => None,
        Err(e) => return Err(e),
    };
    let psd = welch
        .map(|w| estimate_psd_ensemble(&trajectories, config.burn_in, w))
        .transpose()?;
    Ok(EnsembleRun {
        extinction: extinction_stats(&trajectories),
        total_redraws: trajectories.iter().map(|t| t.redraw_count).sum(),
        total_clamps: trajectories.iter().map(|t| t.clamp_count).sum(),
        trajectories,
        stats,
        psd,
        rng_name: RNG_NAME,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closures::ClosureKind;
    use crate::model::ModelParams;

    fn config(scheme: Scheme) -> SimConfig {
        let p = ModelParams::new(2.0, 1.0, 2.0, 200.0, 1.0).unwrap();
        let mut c = SimConfig::new(p, ClosureKind::BernoulliCoupled, scheme);
        c.t_end = 20.0;
        c.dt = 1e-2;
        c.n_replicates = 6;
        c.seed = 42;
        c
    }

    #[test]
    fn replicate_zero_matches_single_run() {
        let c = config(Scheme::Ssa);
        assert_eq!(simulate_replicate(&c, 0).unwrap(), ssa::ssa_simulate(&c).unwrap());
        let c = config(Scheme::DiffusionEm);
        assert_eq!(simulate_replicate(&c, 0).unwrap(), sde::sde_simulate(&c).unwrap());
    }

    #[test]
    fn independent_of_thread_count() {
        for scheme in [Scheme::Ssa, Scheme::DiffusionEm, Scheme::LnaOu] {
            let c = config(scheme);
            let run = |threads| {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .unwrap()
                    .install(|| ensemble_run(&c, None).unwrap())
            };
            assert_eq!(run(1), run(4));
        }
    }

    #[test]
    fn replicates_differ() {
        let run = ensemble_run(&config(Scheme::LnaOu), None).unwrap();
        assert_eq!(run.trajectories.len(), 6);
        assert_ne!(run.trajectories[0].states, run.trajectories[1].states);
        assert_eq!(run.rng_name, RNG_NAME);
    }

    #[test]
    fn failing_replicate_is_reported_with_index() {
        let p = ModelParams::new(2.0, 1.0, 4.0, 200.0, 1.0).unwrap();
        let c = SimConfig::new(p, ClosureKind::BernoulliCoupled, Scheme::LnaOu);
        match ensemble_run(&c, None) {
            Err(Error::NotHurwitz { .. }) | Err(Error::Replicate { .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
