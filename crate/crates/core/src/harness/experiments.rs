use rayon::prelude::*;
use serde::Serialize;

use super::ScalingSequence;
use crate::diffusion::{diffusion_params_from_spec, rbm_stationary_cdf, rbm_transient_cdf, RbmParams};
use crate::error::{Error, Result};
use crate::fluid::{convergence_horizon, integrate_with, ConvergenceHorizon, Region};
use crate::lifting::{ssc_distance, LiftingMap};
use crate::linalg::{self, Vec2};
use crate::params::{canonicalize, CriticalModel, NetworkSpec, Relabeling};
use crate::rng::split_seed;
use crate::simulator::{total_workload, Simulator};
use crate::stats::{ks_statistic, median, quantile};

/// Number of grid points for diffusion-scaled path sampling.
pub const SSC_GRID_POINTS: usize = 1000;
/// Containment tolerance for the fluid case checks.
const REGION_TOL: f64 = 1e-9;

fn check_reps(reps: usize) -> Result<()> {
    if reps == 0 {
        return Err(Error::Config("need at least one replication".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SscLevel {
    pub n: u32,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub max_scaled_workload: f64,
    /// One distance per replication, in replication order.
    pub distances: Vec<f64>,
    pub seeds: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SscReport {
    pub horizon: f64,
    pub reps: usize,
    pub grid_points: usize,
    pub relabeling: Relabeling,
    pub levels: Vec<SscLevel>,
}

impl SscReport {
    pub fn medians(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.median).collect()
    }
}

/// Queue lengths and total workload at each real time in `times`.
fn sample_path(spec: &NetworkSpec, seed: u64, times: &[f64]) -> Result<Vec<(f64, Vec2, f64)>> {
    let mut sim = Simulator::new(spec, seed)?;
    times
        .iter()
        .map(|&t| {
            sim.advance_to(t, |_, _| {})?;
            let st = sim.state();
            Ok((t, st.q_f64(), total_workload(st)))
        })
        .collect()
}

/// Diffusion-scaled distance between the queue lengths and the lifted
/// workload, `sup_t |Q(n^2 t)/n - Delta(W_Tot(n^2 t)/n)|` over a uniform grid
/// of 1000 points on `[0, horizon]`.
pub fn run_ssc_experiment(seq: &ScalingSequence, horizon: f64, reps: usize, seed: u64) -> Result<SscReport> {
    check_reps(reps)?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
    }
    let map = LiftingMap::new(&seq.model);
    let jobs: Vec<(u32, usize)> = seq
        .n_values
        .iter()
        .flat_map(|&n| (0..reps).map(move |r| (n, r)))
        .collect();
    let results: Vec<(f64, f64, u64)> = jobs
        .par_iter()
        .map(|&(n, r)| {
            let s = split_seed(seed, &[u64::from(n), r as u64]);
            let scale = f64::from(n) * f64::from(n);
            let last = (SSC_GRID_POINTS - 1) as f64;
            let times: Vec<f64> = (0..SSC_GRID_POINTS)
                .map(|j| scale * horizon * j as f64 / last)
                .collect();
            let path = sample_path(&seq.spec_for(n), s, &times)?;
            let q: Vec<(f64, Vec2)> = path.iter().map(|&(t, q, _)| (t, q)).collect();
            let w: Vec<(f64, f64)> = path.iter().map(|&(t, _, w)| (t, w)).collect();
            let d = ssc_distance(&q, &w, &map, n)?;
            let w_max = w.iter().map(|&(_, w)| w).fold(0.0, f64::max) / f64::from(n);
            Ok((d, w_max, s))
        })
        .collect::<Result<_>>()?;
    let levels = seq
        .n_values
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let chunk = &results[i * reps..(i + 1) * reps];
            let distances: Vec<f64> = chunk.iter().map(|x| x.0).collect();
            SscLevel {
                n,
                median: median(&distances),
                q1: quantile(&distances, 0.25),
                q3: quantile(&distances, 0.75),
                max_scaled_workload: chunk.iter().map(|x| x.1).fold(0.0, f64::max),
                seeds: chunk.iter().map(|x| x.2).collect(),
                distances,
            }
        })
        .collect();
    Ok(SscReport {
        horizon,
        reps,
        grid_points: SSC_GRID_POINTS,
        relabeling: seq.relabeling,
        levels,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WorkloadLevel {
    pub n: u32,
    /// KS statistic of each batch of `reps` replications.
    pub ks: Vec<f64>,
    pub median_ks: f64,
    /// KS statistic of all batches pooled.
    pub pooled_ks: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Scaled workloads `W_Tot(n^2 t)/n`, batch-major.
    pub samples: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WorkloadReport {
    pub t_probe: f64,
    pub reps: usize,
    pub batches: usize,
    pub stationary: bool,
    pub rbm: RbmParams,
    pub relabeling: Relabeling,
    pub levels: Vec<WorkloadLevel>,
}

impl WorkloadReport {
    pub fn median_ks(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.median_ks).collect()
    }
}

/// Empirical law of `W_Tot(n^2 t_probe)/n` against the RBM limit; the
/// transient cdf, or the stationary one when `stationary` is set. Each of
/// the `batches` batches holds `reps` replications and gets its own KS
/// statistic; the median over batches is reported per `n`.
pub fn run_workload_limit_experiment(
    seq: &ScalingSequence,
    t_probe: f64,
    reps: usize,
    batches: usize,
    stationary: bool,
    seed: u64,
) -> Result<WorkloadReport> {
    check_reps(reps)?;
    if batches == 0 {
        return Err(Error::Config("need at least one batch".into()));
    }
    if !(t_probe > 0.0 && t_probe.is_finite()) {
        return Err(Error::Config(format!("t_probe must be positive, got {t_probe}")));
    }
    let rbm = diffusion_params_from_spec(&seq.base, &seq.model.derived, seq.theta, seq.q_bar0)?;
    let cdf = |x: f64| {
        if stationary {
            rbm_stationary_cdf(x, &rbm)
        } else {
            rbm_transient_cdf(x, t_probe, &rbm).expect("t_probe > 0")
        }
    };
    let per_n = batches * reps;
    let jobs: Vec<(u32, usize, usize)> = seq
        .n_values
        .iter()
        .flat_map(|&n| (0..batches).flat_map(move |b| (0..reps).map(move |r| (n, b, r))))
        .collect();
    let samples: Vec<f64> = jobs
        .par_iter()
        .map(|&(n, b, r)| {
            let s = split_seed(seed, &[u64::from(n), b as u64, r as u64]);
            let nf = f64::from(n);
            let path = sample_path(&seq.spec_for(n), s, &[nf * nf * t_probe])?;
            Ok(path[0].2 / nf)
        })
        .collect::<Result<_>>()?;
    let levels = seq
        .n_values
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let all = &samples[i * per_n..(i + 1) * per_n];
            let ks: Vec<f64> = all.chunks(reps).map(|c| ks_statistic(c, cdf)).collect();
            WorkloadLevel {
                n,
                median_ks: median(&ks),
                pooled_ks: ks_statistic(all, cdf),
                ks,
                mean: all.iter().sum::<f64>() / all.len() as f64,
                min: all.iter().copied().fold(f64::INFINITY, f64::min),
                max: all.iter().copied().fold(0.0, f64::max),
                samples: all.to_vec(),
            }
        })
        .collect();
    Ok(WorkloadReport {
        t_probe,
        reps,
        batches,
        stationary,
        rbm,
        relabeling: seq.relabeling,
        levels,
    })
}

/// Workload relative to `w*`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FluidCase {
    /// `w0 > w*`: ends in `Pi3`.
    Above,
    /// `w0 < w*`: ends in `Pi4`.
    Below,
    /// `w0 = w*`: never changes region.
    Critical,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluidStart {
    pub q0: Vec2,
    pub w0: f64,
    pub case: FluidCase,
    /// `|Q(t0) - Delta(w0)|` in the max norm.
    pub distance: f64,
    /// First real time with `q2 < K2`, if the start was in `Pi1 u Pi2`.
    pub exit_time: Option<f64>,
    /// Regions containing the start point.
    pub start_regions: Vec<Region>,
    /// `q2` strictly decreased while in `Pi1 u Pi2`.
    pub monotone_exit: bool,
    /// The case-specific capture or trapping property held.
    pub case_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluidReport {
    pub m: f64,
    pub eps: f64,
    pub grid_n: usize,
    pub dt: f64,
    pub relabeling: Relabeling,
    pub horizon: ConvergenceHorizon,
    pub worst_distance: f64,
    /// Real-time bound on the exit from `Pi1 u Pi2`, `(K1 + K2) max(M - K2, 0) / eps1`.
    pub exit_bound: f64,
    pub worst_exit_time: f64,
    pub cases_ok: bool,
    pub pass: bool,
    pub starts: Vec<FluidStart>,
}

fn classify_case(w0: f64, w_star: f64) -> FluidCase {
    if (w0 - w_star).abs() <= 1e-12 * w_star.max(1.0) {
        FluidCase::Critical
    } else if w0 > w_star {
        FluidCase::Above
    } else {
        FluidCase::Below
    }
}

fn run_start(q0: Vec2, model: &CriticalModel, map: &LiftingMap, t0: f64, dt: f64) -> Result<FluidStart> {
    let d = &model.derived;
    let k = d.k;
    let w0 = model.workload(q0);
    let case = classify_case(w0, d.w_star);
    let upper = |q: Vec2| q[1] >= k[1];
    let starts_upper = upper(q0);
    let start_regions: Vec<Region> = Region::ALL.into_iter().filter(|r| r.contains(q0, k, 0.0)).collect();

    let mut exit_time = None;
    let mut monotone_exit = true;
    let mut prev_q2 = q0[1];
    let mut entered = [false; 4];
    let mut case_ok = true;
    // Regions still containing every point so far (trapping check).
    let mut trapped = Region::ALL.map(|r| r.contains(q0, k, REGION_TOL));
    let end = integrate_with(q0, t0, dt, d, |t, q| {
        if starts_upper && exit_time.is_none() {
            if upper(q) {
                if t > 0.0 && q[1] >= prev_q2 {
                    monotone_exit = false;
                }
            } else {
                exit_time = Some(t);
            }
        }
        prev_q2 = q[1];
        for (i, r) in Region::ALL.into_iter().enumerate() {
            let inside = r.contains(q, k, REGION_TOL);
            trapped[i] &= inside;
            match (case, r) {
                // Once in Pi3 with w0 > w*, y1 stays at or above K1.
                (FluidCase::Above, Region::Pi3) | (FluidCase::Below, Region::Pi4) => {
                    if entered[i] && !inside {
                        case_ok = false;
                    }
                    entered[i] |= inside;
                }
                _ => {}
            }
        }
    })?;
    let final_region = match case {
        FluidCase::Above => Some(Region::Pi3),
        FluidCase::Below => Some(Region::Pi4),
        FluidCase::Critical => None,
    };
    match final_region {
        Some(r) => case_ok &= r.contains(end, k, REGION_TOL),
        None => case_ok &= trapped.iter().any(|&x| x),
    }
    Ok(FluidStart {
        q0,
        w0,
        case,
        distance: linalg::max_abs_diff(end, map.lift(w0)),
        exit_time,
        start_regions,
        monotone_exit,
        case_ok,
    })
}

/// Integrates every start of a `grid_n x grid_n` grid over `[0, M]^2` up to
/// the certified horizon and checks the distance to `Delta(w0)` and the
/// region-case properties.
pub fn run_fluid_experiment(spec: &NetworkSpec, m: f64, eps: f64, grid_n: usize, dt: f64) -> Result<FluidReport> {
    if grid_n < 2 {
        return Err(Error::Config("grid_n must be at least 2".into()));
    }
    let (canonical, relabeling) = canonicalize(spec)?;
    let model = CriticalModel::from_spec(&canonical)?;
    let map = LiftingMap::new(&model);
    let horizon = convergence_horizon(m, eps, &model)?;
    let step = m / (grid_n - 1) as f64;
    let grid: Vec<Vec2> = (0..grid_n)
        .flat_map(|i| (0..grid_n).map(move |j| [i as f64 * step, j as f64 * step]))
        .collect();
    let starts: Vec<FluidStart> = grid
        .par_iter()
        .map(|&q0| run_start(q0, &model, &map, horizon.t0, dt))
        .collect::<Result<_>>()?;
    let d = &model.derived;
    let exit_bound = (d.k[0] + d.k[1]) * horizon.exit_bound;
    let worst_distance = starts.iter().map(|s| s.distance).fold(0.0, f64::max);
    let worst_exit_time = starts.iter().filter_map(|s| s.exit_time).fold(0.0, f64::max);
    let cases_ok = starts.iter().all(|s| s.case_ok && s.monotone_exit)
        && starts
            .iter()
            .all(|s| s.q0[1] < d.k[1] || s.exit_time.is_some_and(|t| t <= exit_bound + dt));
    Ok(FluidReport {
        m,
        eps,
        grid_n,
        dt,
        relabeling,
        horizon,
        worst_distance,
        exit_bound,
        worst_exit_time,
        cases_ok,
        pass: worst_distance <= eps && cases_ok,
        starts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::reference_spec;

    #[test]
    fn ssc_smoke_at_n_one() {
        let seq = ScalingSequence::new(&reference_spec(), 0.5, vec![1, 2], [1.0, 1.0]).unwrap();
        let r = run_ssc_experiment(&seq, 1.0, 3, 1).unwrap();
        assert_eq!(r.levels.len(), 2);
        assert!(r.levels.iter().all(|l| l.distances.iter().all(|d| d.is_finite())));
        assert_eq!(r, run_ssc_experiment(&seq, 1.0, 3, 1).unwrap());
    }

    #[test]
    fn workload_experiment_is_deterministic() {
        let seq = ScalingSequence::new(&reference_spec(), 1.0, vec![4, 8], [0.0, 0.0]).unwrap();
        let a = run_workload_limit_experiment(&seq, 0.5, 20, 3, false, 9).unwrap();
        assert_eq!(a.levels[0].ks.len(), 3);
        assert_eq!(a.levels[0].samples.len(), 60);
        assert_eq!(a, run_workload_limit_experiment(&seq, 0.5, 20, 3, false, 9).unwrap());
    }

    #[test]
    fn large_theta_concentrates_near_zero() {
        // Strong drift, short probe: most mass sits near zero, as does the limit's.
        let seq = ScalingSequence::new(&reference_spec(), 8.0, vec![20], [0.0, 0.0]).unwrap();
        let r = run_workload_limit_experiment(&seq, 0.05, 200, 1, false, 3).unwrap();
        let limit = rbm_transient_cdf(0.5, 0.05, &r.rbm).unwrap();
        let empirical = r.levels[0].samples.iter().filter(|&&w| w <= 0.5).count() as f64 / 200.0;
        assert!(limit > 0.9);
        assert!(empirical >= 0.8, "empirical mass below 0.5: {empirical}");
    }

    #[test]
    fn manifold_only_grid_converges_immediately() {
        // A 2x2 grid over [0, M] with M tiny keeps every start near the origin.
        let model = CriticalModel::from_spec(&reference_spec()).unwrap();
        let map = LiftingMap::new(&model);
        for w in [0.5, 2.0, 3.0] {
            let s = run_start(map.lift(w), &model, &map, 20.0, 1e-3).unwrap();
            assert!(s.distance <= 1e-10 && s.case_ok);
        }
    }

    #[test]
    fn small_fluid_sweep_passes() {
        let r = run_fluid_experiment(&reference_spec(), 4.0, 1e-3, 5, 1e-2).unwrap();
        assert!(r.pass, "worst {}", r.worst_distance);
        assert!(r.starts.iter().any(|s| s.case == FluidCase::Critical));
    }
}
