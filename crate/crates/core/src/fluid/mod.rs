//! The critical fluid model.
//!
//! In real time the fluid queue lengths solve `q' = Psi(q)` with
//! `Psi(q) = lambda - (I - P^T)(mu o R(q))`. Under the time change
//! `dt/du = sum_i min(q_i, K_i)` this becomes the piecewise linear system
//! `y' = Xi min(y, K)`, which has closed-form solutions in each of the four
//! regions cut out by `K`.

mod convergence;
mod explicit;

use std::io::{self, Write};

use serde::Serialize;

use crate::allocation::allocate;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, Vec2, IDENTITY};
use crate::params::DerivedParams;

pub use convergence::{convergence_horizon, ConvergenceHorizon};
pub use explicit::{
    entering_region, explicit_pi1, explicit_pi2, explicit_pi3, explicit_pi4, explicit_region,
    explicit_solution, region_exit_time, ExplicitSolution,
};

/// States closer than this to the origin (max norm) snap to it.
pub const ORIGIN_TOL: f64 = 1e-12;
pub const DEFAULT_DT: f64 = 1e-3;
const MAX_HALVINGS: u32 = 10;

/// The four closed regions cut out by `K`. Boundaries belong to every
/// adjacent region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Region {
    /// `q1 <= K1, q2 >= K2`
    Pi1,
    /// `q1 >= K1, q2 >= K2`
    Pi2,
    /// `q1 >= K1, q2 <= K2`
    Pi3,
    /// `q1 <= K1, q2 <= K2`
    Pi4,
}

impl Region {
    pub const ALL: [Region; 4] = [Region::Pi1, Region::Pi2, Region::Pi3, Region::Pi4];

    pub fn contains(self, q: Vec2, k: Vec2, tol: f64) -> bool {
        let below1 = q[0] <= k[0] + tol;
        let above1 = q[0] >= k[0] - tol;
        let below2 = q[1] <= k[1] + tol;
        let above2 = q[1] >= k[1] - tol;
        match self {
            Region::Pi1 => below1 && above2,
            Region::Pi2 => above1 && above2,
            Region::Pi3 => above1 && below2,
            Region::Pi4 => below1 && below2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Region::Pi1 => "pi1",
            Region::Pi2 => "pi2",
            Region::Pi3 => "pi3",
            Region::Pi4 => "pi4",
        }
    }
}

/// The lowest-index region containing `q`.
pub fn classify_region(q: Vec2, k: Vec2) -> Region {
    Region::ALL
        .into_iter()
        .find(|r| r.contains(q, k, 0.0))
        .expect("the four regions cover the quadrant")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FluidState {
    pub q: Vec2,
    pub region: Region,
    pub w_tot: f64,
}

impl FluidState {
    pub fn new(q: Vec2, derived: &DerivedParams) -> Self {
        FluidState {
            q,
            region: classify_region(q, derived.k),
            w_tot: linalg::dot(derived.tau, q),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Numeric,
    Explicit,
}

/// Which clock the grid is expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clock {
    Real,
    /// The clock `u` of `y' = Xi min(y, K)`.
    TimeChanged,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluidTrajectory {
    pub method: Method,
    pub clock: Clock,
    pub w0: f64,
    pub points: Vec<(f64, FluidState)>,
}

impl FluidTrajectory {
    pub fn last(&self) -> &FluidState {
        &self.points.last().expect("trajectories hold the initial point").1
    }

    pub fn max_conservation_error(&self) -> f64 {
        self.points
            .iter()
            .map(|(_, s)| (s.w_tot - self.w0).abs())
            .fold(0.0, f64::max)
    }

    /// Columns `t,q1,q2,region,w_tot`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,q1,q2,region,w_tot")?;
        for (t, s) in &self.points {
            writeln!(out, "{t},{},{},{},{}", s.q[0], s.q[1], s.region.label(), s.w_tot)?;
        }
        Ok(())
    }
}

/// `Psi(q) = lambda - (I - P^T)(mu o R(q))`. Small negative components left
/// by the integrator are read as zero.
pub fn psi(q: Vec2, derived: &DerivedParams) -> Result<Vec2> {
    let q = [q[0].max(0.0), q[1].max(0.0)];
    if q == [0.0, 0.0] {
        return Err(Error::AtOrigin);
    }
    let r = allocate(q, derived.k);
    let served = [derived.mu[0] * r[0], derived.mu[1] * r[1]];
    let out = linalg::mat_vec(&linalg::sub(&IDENTITY, &linalg::transpose(&derived.routing)), served);
    Ok([derived.lambda[0] - out[0], derived.lambda[1] - out[1]])
}

/// `Xi min(y, K)`, the time-changed drift. Zero at the origin.
pub fn time_changed_drift(y: Vec2, xi: &Mat2, k: Vec2) -> Vec2 {
    let m = [y[0].max(0.0).min(k[0]), y[1].max(0.0).min(k[1])];
    linalg::mat_vec(xi, m)
}

fn axpy(a: Vec2, h: f64, v: Vec2) -> Vec2 {
    [a[0] + h * v[0], a[1] + h * v[1]]
}

fn rk4<F: Fn(Vec2) -> Vec2>(f: &F, q: Vec2, h: f64) -> Vec2 {
    let k1 = f(q);
    let k2 = f(axpy(q, h / 2.0, k1));
    let k3 = f(axpy(q, h / 2.0, k2));
    let k4 = f(axpy(q, h, k3));
    [
        q[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        q[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// One step of size `h`, split into `2^j` substeps when a component dips
/// below `-10 h |f(q)|`.
fn guarded_step<F: Fn(Vec2) -> Vec2>(f: &F, q: Vec2, h: f64) -> Result<Vec2> {
    for halvings in 0..=MAX_HALVINGS {
        let pieces = 1u32 << halvings;
        let sub = h / f64::from(pieces);
        let mut x = q;
        let mut ok = true;
        for _ in 0..pieces {
            let bound = -10.0 * sub * linalg::norm_inf(f(x));
            x = rk4(f, x, sub);
            if x[0] < bound || x[1] < bound {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(x);
        }
    }
    Err(Error::StepSize {
        retries: MAX_HALVINGS,
        dt: h / f64::from(1u32 << MAX_HALVINGS),
    })
}

fn uniform_grid(horizon: f64, dt: f64) -> Result<(u64, f64)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::Domain(format!("horizon must be finite and >= 0, got {horizon}")));
    }
    let steps = (horizon / dt - 1e-9).ceil().max(0.0) as u64;
    let h = if steps == 0 { 0.0 } else { horizon / steps as f64 };
    Ok((steps, h))
}

fn check_start(q0: Vec2) -> Result<()> {
    if !(q0[0] >= 0.0 && q0[1] >= 0.0 && q0[0].is_finite() && q0[1].is_finite()) {
        return Err(Error::Domain(format!("initial fluid state must be >= 0, got {q0:?}")));
    }
    Ok(())
}

fn drive<F, V>(f: F, q0: Vec2, horizon: f64, dt: f64, mut visit: V) -> Result<Vec2>
where
    F: Fn(Vec2) -> Vec2,
    V: FnMut(f64, Vec2),
{
    check_start(q0)?;
    let (steps, h) = uniform_grid(horizon, dt)?;
    let mut q = q0;
    visit(0.0, q);
    for i in 1..=steps {
        if linalg::norm_inf(q) < ORIGIN_TOL {
            q = [0.0, 0.0];
        } else {
            q = guarded_step(&f, q, h)?;
            // Tolerated undershoot past an empty queue is read as empty.
            q = [q[0].max(0.0), q[1].max(0.0)];
        }
        visit(i as f64 * h, q);
    }
    Ok(q)
}

/// RK4 on `q' = Psi(q)` over `[0, horizon]`, calling `visit` at every grid
/// point. Returns the final state. The grid step is `horizon / ceil(horizon / dt)`.
pub fn integrate_with<V: FnMut(f64, Vec2)>(
    q0: Vec2,
    horizon: f64,
    dt: f64,
    derived: &DerivedParams,
    visit: V,
) -> Result<Vec2> {
    drive(
        |q| psi(q, derived).unwrap_or([0.0, 0.0]),
        q0,
        horizon,
        dt,
        visit,
    )
}

fn record(
    method: Method,
    clock: Clock,
    derived: &DerivedParams,
    q0: Vec2,
    run: impl FnOnce(&mut dyn FnMut(f64, Vec2)) -> Result<Vec2>,
) -> Result<FluidTrajectory> {
    let mut points = Vec::new();
    run(&mut |t, q| {
        let q = [q[0].max(0.0), q[1].max(0.0)];
        points.push((t, FluidState::new(q, derived)));
    })?;
    Ok(FluidTrajectory {
        method,
        clock,
        w0: linalg::dot(derived.tau, q0),
        points,
    })
}

/// RK4 on `q' = Psi(q)`, recording every grid point.
pub fn integrate(q0: Vec2, horizon: f64, dt: f64, derived: &DerivedParams) -> Result<FluidTrajectory> {
    record(Method::Numeric, Clock::Real, derived, q0, |visit| {
        integrate_with(q0, horizon, dt, derived, visit)
    })
}

/// RK4 on the time-changed system `y' = Xi min(y, K)` over `u in [0, horizon]`.
pub fn integrate_time_changed(
    y0: Vec2,
    horizon: f64,
    du: f64,
    derived: &DerivedParams,
) -> Result<FluidTrajectory> {
    let xi = derived.xi;
    let k = derived.k;
    record(Method::Numeric, Clock::TimeChanged, derived, y0, |visit| {
        drive(|y| time_changed_drift(y, &xi, k), y0, horizon, du, visit)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimeChangeSample {
    pub t: f64,
    /// `G(t)`, the time-changed clock reached at real time `t`.
    pub g: f64,
    pub y: Vec2,
}

/// Real-time samples of the time-changed solution: `G' = 1 / sum_i min(y_i(G), K_i)`.
///
/// Integrates the augmented system `dy/du = Xi min(y, K)`, `dt/du = sum_i
/// min(y_i, K_i)` in the `u` clock and inverts `t(u)` by bisection inside
/// the step that crosses each sample time `0, dt, 2 dt, ...`.
pub fn time_change(q0: Vec2, horizon: f64, dt: f64, derived: &DerivedParams) -> Result<Vec<TimeChangeSample>> {
    check_start(q0)?;
    if linalg::norm_inf(q0) < ORIGIN_TOL {
        return Err(Error::Domain("the time change is undefined from the origin".into()));
    }
    let (steps, h) = uniform_grid(horizon, dt)?;
    let xi = derived.xi;
    let k = derived.k;
    let cap = k[0] + k[1];
    // State: (y1, y2, t). The y-part is linear in each region, t' = S(y).
    let f = |s: [f64; 3]| -> [f64; 3] {
        let y = [s[0], s[1]];
        let d = time_changed_drift(y, &xi, k);
        let m = s[0].max(0.0).min(k[0]) + s[1].max(0.0).min(k[1]);
        [d[0], d[1], m]
    };
    let step = |s: [f64; 3], h: f64| -> [f64; 3] {
        let add = |a: [f64; 3], c: f64, b: [f64; 3]| [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]];
        let k1 = f(s);
        let k2 = f(add(s, h / 2.0, k1));
        let k3 = f(add(s, h / 2.0, k2));
        let k4 = f(add(s, h, k3));
        let mut out = s;
        for i in 0..3 {
            out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out
    };
    // Each u-step advances real time by at most h.
    let du = h.max(f64::MIN_POSITIVE) / cap;
    let mut samples = vec![TimeChangeSample { t: 0.0, g: 0.0, y: q0 }];
    let mut s = [q0[0], q0[1], 0.0];
    let mut u = 0.0;
    let mut next = 1u64;
    let max_u_steps = steps.saturating_mul(10_000).max(1);
    let mut taken = 0u64;
    while next <= steps {
        let target = next as f64 * h;
        let s_new = step(s, du);
        if s_new[2] >= target {
            // Invert t(u) inside [u, u + du].
            let (mut lo, mut hi) = (0.0, du);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if step(s, mid)[2] < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * (u + du).max(1.0) {
                    break;
                }
            }
            let hit = 0.5 * (lo + hi);
            let at = step(s, hit);
            samples.push(TimeChangeSample {
                t: target,
                g: u + hit,
                y: [at[0], at[1]],
            });
            next += 1;
            continue;
        }
        s = s_new;
        u += du;
        taken += 1;
        if taken > max_u_steps {
            return Err(Error::Domain("time change did not reach the horizon".into()));
        }
    }
    Ok(samples)
}
