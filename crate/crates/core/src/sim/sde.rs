//! Euler–Maruyama integration of the density diffusion
//! `dx = b(x) dt + B(x) dW`, `B Bᵀ = a(x)`, and of the LNA OU process
//! `dy = J y dt + B dW` with `B` frozen at `K3`.

use rand::Rng;
use rand_distr::StandardNormal;

use super::rng::SimRng;
use super::{Absorption, Boundary, Coordinates, SimConfig, Trajectory, Viewpoint};
use crate::closures::full_covariance;
use crate::error::{Error, Result};
use crate::matrix::{factorize_covariance, Mat2, SymMatrix2};
use crate::model::{drift, jacobian_at_k3, require_coexistence, State2};

/// Coordinate floor used when an open-domain step keeps leaving the quadrant.
pub const OPEN_DOMAIN_FLOOR: f64 = 1e-9;
/// Gaussian draws attempted per open-domain step before clamping.
pub const OPEN_DOMAIN_MAX_REDRAWS: u32 = 100;

fn gaussian_pair(rng: &mut SimRng) -> [f64; 2] {
    [rng.sample(StandardNormal), rng.sample(StandardNormal)]
}

/// Simulates replicate 0 of `config`.
pub fn sde_simulate(config: &SimConfig) -> Result<Trajectory> {
    let mut rng = super::rng::replicate_rng(config.seed, 0);
    run_diffusion(config, &mut rng)
}

pub(crate) fn run_diffusion(config: &SimConfig, rng: &mut SimRng) -> Result<Trajectory> {
    config.validate()?;
    let params = &config.params;
    let dt = config.dt;
    let sqrt_dt = dt.sqrt();
    let total = config.total_steps();
    let every = config.steps_per_sample();
    let mut traj = Trajectory::new(Coordinates::Density, (total / every) as usize + 1);

    let mut x = config.initial_density()?;
    match config.viewpoint {
        Viewpoint::Absorbed => {
            if let Some(boundary) = Boundary::classify(x.n <= 0.0, x.p <= 0.0) {
                traj.absorbed_at = Some(Absorption { time: 0.0, boundary });
                return Ok(traj);
            }
        }
        Viewpoint::OpenDomain => {
            if !x.in_open_quadrant() {
                x = State2::new(x.n.max(OPEN_DOMAIN_FLOOR), x.p.max(OPEN_DOMAIN_FLOOR));
                traj.clamp_count += 1;
            }
        }
    }
    traj.push(0.0, x);

    for step in 1..=total {
        let t = step as f64 * dt;
        let b = drift(params, x);
        let sigma = factorize_covariance(&full_covariance(params, x, config.closure)).map_err(
            |e| Error::StepFailure {
                time: t,
                reason: e.to_string(),
            },
        )?;
        let propose = |rng: &mut SimRng| {
            let noise = sigma.apply(gaussian_pair(rng));
            State2::new(
                x.n + b[0] * dt + noise[0] * sqrt_dt,
                x.p + b[1] * dt + noise[1] * sqrt_dt,
            )
        };
        let mut next = propose(rng);
        match config.viewpoint {
            Viewpoint::Absorbed => {
                if let Some(boundary) = Boundary::classify(next.n <= 0.0, next.p <= 0.0) {
                    traj.steps = step;
                    traj.absorbed_at = Some(Absorption { time: t, boundary });
                    return Ok(traj);
                }
            }
            Viewpoint::OpenDomain => {
                let mut attempts = 1;
                if !next.in_open_quadrant() {
                    traj.redraw_count += 1;
                }
                while !next.in_open_quadrant() && attempts < OPEN_DOMAIN_MAX_REDRAWS {
                    next = propose(rng);
                    attempts += 1;
                }
                if !next.in_open_quadrant() {
                    next = State2::new(
                        next.n.max(OPEN_DOMAIN_FLOOR),
                        next.p.max(OPEN_DOMAIN_FLOOR),
                    );
                    traj.clamp_count += 1;
                }
            }
        }
        x = next;
        if step % every == 0 {
            traj.push(t, x);
        }
    }
    traj.steps = total;
    Ok(traj)
}

/// Simulates replicate 0 of `config` under the LNA. States are deviations
/// from `K3`.
pub fn ou_simulate(config: &SimConfig) -> Result<Trajectory> {
    let mut rng = super::rng::replicate_rng(config.seed, 0);
    run_ou(config, &mut rng)
}

pub(crate) fn run_ou(config: &SimConfig, rng: &mut SimRng) -> Result<Trajectory> {
    config.validate()?;
    let params = &config.params;
    let k3 = require_coexistence(params)?;
    let j = jacobian_at_k3(params)?;
    if !j.is_hurwitz() {
        return Err(Error::NotHurwitz {
            trace: j.trace(),
            det: j.det(),
        });
    }
    let sigma = factorize_covariance(&full_covariance(params, k3, config.closure))?;
    let start = config.initial_density()?;
    ou_path(
        &j,
        &sigma,
        [start.n - k3.n, start.p - k3.p],
        config,
        rng,
    )
}

/// Replicate 0 of a general linear OU process `dy = J y dt + B dW` with
/// `B Bᵀ = d`, started at `y0` and sampled on the time grid of `config`.
/// The model parameters of `config` are not used.
pub fn ou_simulate_linear(
    j: &Mat2,
    d: &SymMatrix2,
    y0: [f64; 2],
    config: &SimConfig,
) -> Result<Trajectory> {
    config.validate()?;
    if !j.is_hurwitz() {
        return Err(Error::NotHurwitz {
            trace: j.trace(),
            det: j.det(),
        });
    }
    let sigma = factorize_covariance(d)?;
    let mut rng = super::rng::replicate_rng(config.seed, 0);
    ou_path(j, &sigma, y0, config, &mut rng)
}

/// Euler–Maruyama path of `dy = J y dt + sigma dW` from `y0`, sampled on
/// the config's stride grid.
pub(crate) fn ou_path(
    j: &Mat2,
    sigma: &Mat2,
    y0: [f64; 2],
    config: &SimConfig,
    rng: &mut SimRng,
) -> Result<Trajectory> {
    let dt = config.dt;
    let sqrt_dt = dt.sqrt();
    let total = config.total_steps();
    let every = config.steps_per_sample();
    let mut traj = Trajectory::new(Coordinates::Deviation, (total / every) as usize + 1);
    let mut y = y0;
    traj.push(0.0, State2::from(y));
    for step in 1..=total {
        let jy = j.apply(y);
        let noise = sigma.apply(gaussian_pair(rng));
        y = [
            y[0] + jy[0] * dt + noise[0] * sqrt_dt,
            y[1] + jy[1] * dt + noise[1] * sqrt_dt,
        ];
        if step % every == 0 {
            traj.push(step as f64 * dt, State2::from(y));
        }
    }
    traj.steps = total;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closures::ClosureKind;
    use crate::model::ModelParams;
    use crate::sim::{InitialState, Scheme};

    fn config(omega: f64, scheme: Scheme) -> SimConfig {
        let p = ModelParams::new(2.0, 1.0, 2.0, omega, 1.0).unwrap();
        let mut c = SimConfig::new(p, ClosureKind::BernoulliCoupled, scheme);
        c.t_end = 20.0;
        c.sample_stride = 0.1;
        c.dt = 1e-3;
        c
    }

    #[test]
    fn zero_noise_limit_stays_at_k3() {
        let traj = sde_simulate(&config(f64::MAX, Scheme::DiffusionEm)).unwrap();
        assert_eq!(traj.len(), 201);
        for s in &traj.states {
            assert!((s.n - 1.0).abs() <= 1e-15 && (s.p - 0.5).abs() <= 1e-15, "{s:?}");
        }
    }

    #[test]
    fn stride_grid_times() {
        let traj = sde_simulate(&config(1000.0, Scheme::DiffusionEm)).unwrap();
        assert_eq!(traj.len(), 201);
        assert_eq!(traj.times[10], 10.0 * 100.0 * 1e-3);
        assert_eq!(traj.steps, 20_000);
    }

    #[test]
    fn absorbed_start_on_axis() {
        let mut c = config(1000.0, Scheme::DiffusionEm);
        c.initial_state = InitialState::At(State2::new(0.0, 0.3));
        let traj = sde_simulate(&c).unwrap();
        assert!(traj.is_empty());
        assert_eq!(traj.absorbed_at.unwrap().boundary, Boundary::PreyAxis);
    }

    #[test]
    fn absorbed_small_population_hits_boundary() {
        let mut c = config(2.0, Scheme::DiffusionEm);
        c.t_end = 500.0;
        c.dt = 1e-2;
        let traj = sde_simulate(&c).unwrap();
        let abs = traj.absorbed_at.expect("tiny population should be absorbed");
        assert!(traj.states.iter().all(|s| s.in_open_quadrant()));
        assert!(traj.times.last().copied().unwrap_or(0.0) < abs.time);
    }

    #[test]
    fn open_domain_never_leaves_quadrant() {
        let mut c = config(2.0, Scheme::DiffusionEm);
        c.viewpoint = Viewpoint::OpenDomain;
        c.t_end = 200.0;
        c.dt = 1e-2;
        let traj = sde_simulate(&c).unwrap();
        assert!(traj.survived());
        assert!(traj.states.iter().all(|s| s.in_open_quadrant()));
        assert!(traj.redraw_count > 0);
    }

    #[test]
    fn ou_without_noise_decays() {
        let j = Mat2::new(-0.25, -1.0, 0.25, 0.0);
        let mut c = config(1.0, Scheme::LnaOu);
        c.t_end = 200.0;
        let mut rng = crate::sim::rng::replicate_rng(0, 0);
        let traj = ou_path(&j, &Mat2::new(0.0, 0.0, 0.0, 0.0), [1.0, -1.0], &c, &mut rng).unwrap();
        let last = traj.states.last().unwrap();
        assert!(last.n.abs() < 1e-9 && last.p.abs() < 1e-9);
    }

    #[test]
    fn ou_rejects_post_hopf() {
        let p = ModelParams::new(2.0, 1.0, 4.0, 1.0, 1.0).unwrap();
        let c = SimConfig::new(p, ClosureKind::BernoulliCoupled, Scheme::LnaOu);
        assert!(matches!(ou_simulate(&c), Err(Error::NotHurwitz { .. })));
    }
}
