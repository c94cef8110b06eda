//! Closed-form solutions of `y' = Xi min(y, K)` region by region, and their
//! stitching across region boundaries.

use serde::Serialize;

use super::{classify_region, time_changed_drift, Clock, FluidState, FluidTrajectory, Method, Region};
use crate::linalg::{self, Vec2};
use crate::params::CriticalModel;

/// Tolerance for "the point lies on this region's boundary".
const BOUNDARY_TOL: f64 = 1e-10;
/// Bisection stops once the bracket is this narrow.
const EXIT_TOL: f64 = 1e-12;
const MAX_SEGMENTS: usize = 32;

/// Region `Pi3`: `y2` relaxes to `(rho2/rho1) K1` at rate `xi22`, `y1`
/// follows from conservation.
pub fn explicit_pi3(y0: Vec2, t: f64, model: &CriticalModel) -> Vec2 {
    let d = &model.derived;
    let cap = model.rho_ratio() * d.k[0];
    let w = model.workload(y0);
    let decay = (y0[1] - cap) * (d.xi[1][1] * t).exp();
    [
        -(d.tau[1] / d.tau[0]) * decay + (w - d.w_star) / d.tau[0] + d.k[0],
        decay + cap,
    ]
}

/// Region `Pi4`: `y' = Xi y`, eigenvalues `0` and `alpha2`.
pub fn explicit_pi4(y0: Vec2, t: f64, model: &CriticalModel) -> Vec2 {
    let d = &model.derived;
    let ratio = model.rho_ratio();
    let (tau, rho) = (d.tau, d.rho);
    let c2 = model.workload(y0) / d.w_star * d.k[0];
    let c2p = -(y0[1] - ratio * y0[0]) * (tau[1] * rho[0] / (tau[0] * rho[0] + tau[1] * rho[1]));
    let e = (model.xi.alpha2 * t).exp();
    [c2 + c2p * e, c2 * ratio - c2p * (tau[0] / tau[1]) * e]
}

/// Region `Pi2`: constant velocity `Xi K`.
pub fn explicit_pi2(y0: Vec2, t: f64, model: &CriticalModel) -> Vec2 {
    let v = linalg::mat_vec(&model.derived.xi, model.derived.k);
    [y0[0] + t * v[0], y0[1] + t * v[1]]
}

/// Region `Pi1`: `y1' = xi11 y1 + xi12 K2`, `y2` from conservation.
pub fn explicit_pi1(y0: Vec2, t: f64, model: &CriticalModel) -> Vec2 {
    let d = &model.derived;
    let (xi, k, tau) = (d.xi, d.k, d.tau);
    let y1_eq = -xi[0][1] * k[1] / xi[0][0];
    let y1 = (y0[0] - y1_eq) * (xi[0][0] * t).exp() + y1_eq;
    [y1, (model.workload(y0) - tau[0] * y1) / tau[1]]
}

pub fn explicit_region(region: Region, y0: Vec2, t: f64, model: &CriticalModel) -> Vec2 {
    match region {
        Region::Pi1 => explicit_pi1(y0, t, model),
        Region::Pi2 => explicit_pi2(y0, t, model),
        Region::Pi3 => explicit_pi3(y0, t, model),
        Region::Pi4 => explicit_pi4(y0, t, model),
    }
}

/// Signed slack of each defining inequality (nonnegative inside).
fn slacks(region: Region, y: Vec2, k: Vec2) -> [f64; 2] {
    match region {
        Region::Pi1 => [k[0] - y[0], y[1] - k[1]],
        Region::Pi2 => [y[0] - k[0], y[1] - k[1]],
        Region::Pi3 => [y[0] - k[0], k[1] - y[1]],
        Region::Pi4 => [k[0] - y[0], k[1] - y[1]],
    }
}

/// First time in `(0, horizon]` at which the region's closed-form solution
/// from `y0` leaves the region, or `None` if it stays. Each coordinate of a
/// region solution is monotone, so every slack crosses zero at most once
/// and bisection brackets it to `1e-12`.
pub fn region_exit_time(region: Region, y0: Vec2, horizon: f64, model: &CriticalModel) -> Option<f64> {
    let k = model.derived.k;
    let at = |t: f64| slacks(region, explicit_region(region, y0, t, model), k);
    let end = at(horizon);
    let mut exit: Option<f64> = None;
    for c in 0..2 {
        if end[c] >= -EXIT_TOL {
            continue;
        }
        let (mut lo, mut hi) = (0.0, horizon);
        while hi - lo > EXIT_TOL {
            let mid = 0.5 * (lo + hi);
            if at(mid)[c] >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        exit = Some(exit.map_or(hi, |e: f64| e.min(hi)));
    }
    exit
}

/// The region the trajectory from `y` moves into. Away from boundaries this
/// is the region containing `y`; on a boundary it is decided by the drift.
pub fn entering_region(y: Vec2, model: &CriticalModel) -> Region {
    let k = model.derived.k;
    let candidates: Vec<Region> = Region::ALL
        .into_iter()
        .filter(|r| r.contains(y, k, BOUNDARY_TOL))
        .collect();
    if candidates.len() <= 1 {
        return candidates.first().copied().unwrap_or_else(|| classify_region(y, k));
    }
    let v = time_changed_drift(y, &model.derived.xi, k);
    let speed = linalg::norm_inf(v);
    if speed == 0.0 {
        return candidates[0];
    }
    let h = 1e-6 * (1.0 + linalg::norm_inf(y)) / speed;
    let probe = [y[0] + h * v[0], y[1] + h * v[1]];
    candidates
        .iter()
        .copied()
        .find(|r| r.contains(probe, k, 0.0))
        .unwrap_or(candidates[0])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExplicitSolution {
    pub trajectory: FluidTrajectory,
    /// `(u, region entered)` at the start and at every region switch.
    pub segments: Vec<(f64, Region)>,
}

/// The stitched closed-form solution on `u in [0, horizon]`, sampled on
/// the uniform grid `k du`.
pub fn explicit_solution(y0: Vec2, horizon: f64, du: f64, model: &CriticalModel) -> ExplicitSolution {
    let d = &model.derived;
    let steps = (horizon / du - 1e-9).ceil().max(0.0) as u64;
    let h = if steps == 0 { 0.0 } else { horizon / steps as f64 };
    let mut points = Vec::with_capacity(steps as usize + 1);
    let mut segments = Vec::new();
    let mut start_u = 0.0;
    let mut start_y = y0;
    let mut next = 0u64;
    let origin = linalg::norm_inf(y0) == 0.0;
    loop {
        let region = entering_region(start_y, model);
        segments.push((start_u, region));
        let remaining = (horizon - start_u).max(0.0);
        let exit = if origin || segments.len() >= MAX_SEGMENTS {
            None
        } else {
            region_exit_time(region, start_y, remaining, model)
        };
        let seg_end = exit.map_or(horizon, |e| start_u + e);
        while next <= steps && (next as f64 * h <= seg_end || exit.is_none()) {
            let u = next as f64 * h;
            let y = if origin { [0.0, 0.0] } else { explicit_region(region, start_y, u - start_u, model) };
            points.push((u, FluidState::new(y, d)));
            next += 1;
        }
        match exit {
            Some(e) => {
                start_y = explicit_region(region, start_y, e, model);
                start_u = seg_end;
            }
            None => break,
        }
    }
    ExplicitSolution {
        trajectory: FluidTrajectory {
            method: Method::Explicit,
            clock: Clock::TimeChanged,
            w0: linalg::dot(d.tau, y0),
            points,
        },
        segments,
    }
}
