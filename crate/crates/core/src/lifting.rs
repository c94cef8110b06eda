//! The invariant manifold and the lifting map `Delta` from a workload level
//! to the equilibrium queue-length vector.
//!
//! All quantities assume node 1 (index 0) is the unique bottleneck; see
//! [`crate::params::canonicalize`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::params::CriticalModel;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LiftingMap {
    pub w_star: f64,
    pub k1: f64,
    pub tau1: f64,
    /// `rho_2 / rho_1`.
    pub rho_ratio: f64,
    /// Lipschitz constant `max(2 K1 / w* + mu1, 2 C2)`.
    pub c1: f64,
    /// `mu1 K1 / (lambda1 w*) * max_i lambda_i / mu_i`.
    pub c2: f64,
}

/// One coordinate of the lifted vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coordinate {
    First,
    Second,
}

impl LiftingMap {
    pub fn new(model: &CriticalModel) -> Self {
        let d = &model.derived;
        let k1 = d.k[0];
        let w_star = d.w_star;
        let max_ratio = (d.lambda[0] / d.mu[0]).max(d.lambda[1] / d.mu[1]);
        let c2 = d.mu[0] * k1 / (d.lambda[0] * w_star) * max_ratio;
        let c1 = (2.0 * k1 / w_star + d.mu[0]).max(2.0 * c2);
        LiftingMap {
            w_star,
            k1,
            tau1: d.tau[0],
            rho_ratio: model.rho_ratio(),
            c1,
            c2,
        }
    }

    /// Height of the manifold above the kink, `(rho_2 / rho_1) K1`.
    pub fn cap(&self) -> f64 {
        self.rho_ratio * self.k1
    }

    /// `Delta(w)` for `w >= 0`.
    pub fn lift(&self, w: f64) -> Vec2 {
        let below = w.min(self.w_star) / self.w_star;
        let above = (w - self.w_star).max(0.0);
        [below * self.k1 + above / self.tau1, below * self.cap()]
    }

    /// Inverse of one coordinate of `Delta`. For the second coordinate every
    /// value at or above the cap returns `+inf`: the lifted second queue
    /// never exceeds the cap, so `{Delta_2(W) > y}` is empty there.
    pub fn inverse(&self, x: f64, coordinate: Coordinate) -> f64 {
        match coordinate {
            Coordinate::First => {
                if x < self.k1 {
                    x * self.w_star / self.k1
                } else {
                    self.tau1 * (x - self.k1) + self.w_star
                }
            }
            Coordinate::Second => {
                if x < self.cap() {
                    x * self.w_star / (self.rho_ratio * self.k1)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// `x_2 = (rho_2 / rho_1) min(x_1, K1)` up to `tol`.
    pub fn on_manifold(&self, x: Vec2, tol: f64) -> bool {
        (x[1] - self.rho_ratio * x[0].min(self.k1)).abs() <= tol
    }
}

/// `sup_t |Q(t)/n - Delta(W(t)/n)|` over a common sampling grid. Inputs are
/// unscaled paths sampled at the real times `n^2 t`; the grid times are
/// compared exactly.
pub fn ssc_distance(
    q_path: &[(f64, Vec2)],
    w_tot_path: &[(f64, f64)],
    map: &LiftingMap,
    n: u32,
) -> Result<f64> {
    if q_path.len() != w_tot_path.len() {
        return Err(Error::Alignment(format!(
            "queue path has {} points, workload path {}",
            q_path.len(),
            w_tot_path.len()
        )));
    }
    let scale = f64::from(n);
    let mut sup: f64 = 0.0;
    for (i, ((tq, q), (tw, w))) in q_path.iter().zip(w_tot_path).enumerate() {
        if tq != tw {
            return Err(Error::Alignment(format!(
                "grid point {i}: queue time {tq} differs from workload time {tw}"
            )));
        }
        let lifted = map.lift(w / scale);
        let d = (q[0] / scale - lifted[0]).abs().max((q[1] / scale - lifted[1]).abs());
        sup = sup.max(d);
    }
    Ok(sup)
}
