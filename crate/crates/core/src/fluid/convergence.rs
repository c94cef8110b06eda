//! A certified horizon after which every fluid trajectory started in
//! `[0, M]^2` is within `eps` of its equilibrium `Delta(w_0)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::CriticalModel;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergenceHorizon {
    /// Real-time horizon `t0 = (K1 + K2) u0`.
    pub t0: f64,
    /// Horizon in the time-changed clock.
    pub u0: f64,
    /// Bound on the time spent in `Pi1 u Pi2`: `max(M - K2, 0) / eps1`.
    pub exit_bound: f64,
    /// Exponential rate used for the relaxation phase.
    pub rate: f64,
    /// Prefactor `C(M)` of the relaxation bound.
    pub prefactor: f64,
}

/// Bound built from the region-wise rates.
///
/// In `Pi1 u Pi2`, `y2` decreases at rate at least `eps1` in the `u` clock,
/// so the trajectory leaves within `max(M - K2, 0) / eps1`. Afterwards it
/// relaxes exponentially: in `Pi3` at rate `|xi22|`; in `Pi4` at rate
/// `|alpha2|`, which measured against the first lifting coordinate is
/// slowed by the slope `tau1 K1 / w*` of that coordinate below the kink.
/// Both relaxing distances are at most `C(M) = (tau1 + tau2) M max(1/tau1,
/// 1/tau2)`. Real time is recovered from `G(t) >= t / (K1 + K2)`.
///
/// The bound depends on `M` on purpose; it is a diagnostic horizon, checked
/// against integrated trajectories by the fluid experiment.
pub fn convergence_horizon(m: f64, eps: f64, model: &CriticalModel) -> Result<ConvergenceHorizon> {
    if !(m > 0.0 && m.is_finite() && eps > 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("need M > 0 and eps > 0, got M = {m}, eps = {eps}")));
    }
    let d = &model.derived;
    let exit_bound = (m - d.k[1]).max(0.0) / model.xi.eps1;
    let rate = d.xi[1][1]
        .abs()
        .min(model.xi.alpha2.abs() * d.tau[0] * d.k[0] / d.w_star);
    let prefactor = (d.tau[0] + d.tau[1]) * m * (1.0 / d.tau[0]).max(1.0 / d.tau[1]);
    let relax = (prefactor / eps).ln().max(0.0) / rate;
    let u0 = exit_bound + relax;
    Ok(ConvergenceHorizon {
        t0: (d.k[0] + d.k[1]) * u0,
        u0,
        exit_bound,
        rate,
        prefactor,
    })
}
