//! The heavy-traffic workload limit: a reflected Brownian motion with drift
//! `-theta` and variance `sigma2`, its closed-form distributions, an Euler
//! oracle and the joint queue-length tail obtained through the lifting map.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifting::{Coordinate, LiftingMap};
use crate::linalg::{self, Vec2};
use crate::params::{check_critical_loading, DerivedParams, NetworkSpec, CRITICAL_TOL};
use crate::rng::split_seed;

pub const DEFAULT_EULER_DT: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbmParams {
    pub theta: f64,
    pub sigma2: f64,
    pub w0: f64,
}

impl RbmParams {
    pub fn new(theta: f64, sigma2: f64, w0: f64) -> Result<Self> {
        let p = RbmParams { theta, sigma2, w0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let fine = |x: f64| x.is_finite();
        if !(fine(self.theta) && self.theta > 0.0) {
            return Err(Error::Domain(format!("theta must be positive, got {}", self.theta)));
        }
        if !(fine(self.sigma2) && self.sigma2 > 0.0) {
            return Err(Error::Domain(format!("sigma2 must be positive, got {}", self.sigma2)));
        }
        if !(fine(self.w0) && self.w0 >= 0.0) {
            return Err(Error::Domain(format!("w0 must be >= 0, got {}", self.w0)));
        }
        Ok(())
    }

    /// Rate `2 theta / sigma2` of the exponential stationary law.
    pub fn stationary_rate(&self) -> f64 {
        2.0 * self.theta / self.sigma2
    }
}

/// Standard normal cdf, `0.5 erfc(-z / sqrt 2)`.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// `P(W(t) <= x | W(0) = w0)` for the reflected process.
pub fn rbm_transient_cdf(x: f64, t: f64, p: &RbmParams) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("transient cdf needs t > 0, got {t}")));
    }
    if x < 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(1.0);
    }
    let s = (p.sigma2 * t).sqrt();
    let drift = p.theta * t;
    let a = normal_cdf((x - p.w0 + drift) / s);
    let b = (-p.stationary_rate() * x).exp() * normal_cdf((-x - p.w0 + drift) / s);
    Ok((a - b).clamp(0.0, 1.0))
}

/// `1 - exp(-2 theta x / sigma2)`.
pub fn rbm_stationary_cdf(x: f64, p: &RbmParams) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-p.stationary_rate() * x).exp_m1()
    }
}

fn euler_steps(dt: f64, t: f64) -> u64 {
    (t / dt).round() as u64
}

/// One Euler path with reflection at zero, `W <- max(W - theta dt + sigma
/// sqrt(dt) Z, 0)`, recorded at `0, dt, 2 dt, ...`. `sigma2 = 0` is allowed
/// here and gives the deterministic path `max(w0 - theta t, 0)`.
pub fn rbm_simulate(p: &RbmParams, dt: f64, horizon: f64, seed: u64) -> Result<Vec<(f64, f64)>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    let steps = euler_steps(dt, horizon);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = (p.sigma2 * dt).sqrt();
    let mut w = p.w0;
    let mut path = Vec::with_capacity(steps as usize + 1);
    path.push((0.0, w));
    for i in 1..=steps {
        let z: f64 = rng.sample(StandardNormal);
        w = (w - p.theta * dt + scale * z).max(0.0);
        path.push((i as f64 * dt, w));
    }
    Ok(path)
}

/// Values of `paths` independent Euler paths at each checkpoint (sorted
/// ascending). Path `j` uses seed `split_seed(seed, [j])`, so the result
/// does not depend on the number of worker threads.
pub fn rbm_euler_checkpoints(
    p: &RbmParams,
    dt: f64,
    checkpoints: &[f64],
    paths: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    if checkpoints.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Domain("checkpoints must be sorted".into()));
    }
    let marks: Vec<u64> = checkpoints.iter().map(|&t| euler_steps(dt, t)).collect();
    let scale = (p.sigma2 * dt).sqrt();
    let drift = p.theta * dt;
    let per_path: Vec<Vec<f64>> = (0..paths)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, &[j as u64]));
            let mut w = p.w0;
            let mut step = 0u64;
            marks
                .iter()
                .map(|&m| {
                    while step < m {
                        let z: f64 = rng.sample(StandardNormal);
                        w = (w - drift + scale * z).max(0.0);
                        step += 1;
                    }
                    w
                })
                .collect()
        })
        .collect();
    Ok((0..checkpoints.len())
        .map(|c| per_path.iter().map(|v| v[c]).collect())
        .collect())
}

/// `z = max(Delta1^-1(x), Delta2^-1(y))`, the workload level at which both
/// lifted queues exceed `(x, y)`.
pub fn tail_level(x: f64, y: f64, map: &LiftingMap) -> f64 {
    let x = x.max(0.0);
    let y = y.max(0.0);
    map.inverse(x, Coordinate::First).max(map.inverse(y, Coordinate::Second))
}

/// `P(Q1(t) > x, Q2(t) > y)` in the diffusion approximation,
/// `P(W(t) > z)`; zero when `y` is at or above the manifold cap.
pub fn joint_tail(x: f64, y: f64, t: f64, p: &RbmParams, map: &LiftingMap) -> Result<f64> {
    let z = tail_level(x, y, map);
    if z.is_infinite() {
        return Ok(0.0);
    }
    Ok(1.0 - rbm_transient_cdf(z, t, p)?)
}

/// Stationary counterpart of [`joint_tail`].
pub fn joint_tail_stationary(x: f64, y: f64, p: &RbmParams, map: &LiftingMap) -> f64 {
    let z = tail_level(x, y, map);
    if z.is_infinite() {
        0.0
    } else {
        1.0 - rbm_stationary_cdf(z, p)
    }
}

/// RBM parameters of the workload limit for a critical base spec: `sigma2`
/// from the primitives and `w0 = tau^T q_bar0`.
pub fn diffusion_params_from_spec(
    spec: &NetworkSpec,
    derived: &DerivedParams,
    theta: f64,
    q_bar0: Vec2,
) -> Result<RbmParams> {
    spec.validate()?;
    if !check_critical_loading(derived, CRITICAL_TOL) {
        return Err(Error::NotCritical {
            rho: derived.rho_total,
        });
    }
    RbmParams::new(theta, derived.sigma2, linalg::dot(derived.tau, q_bar0))
}
