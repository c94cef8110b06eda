//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs without the libtest harness so the PASS/FAIL lines always print.
//! `LPS_ACCEPT=1,4` restricts the run to the listed criteria. Seeds and
//! tolerances are fixed constants; nothing here is tuned per run.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use lps_core::diffusion::{rbm_euler_checkpoints, rbm_stationary_cdf, rbm_transient_cdf, RbmParams};
use lps_core::fluid::{explicit_region, integrate_time_changed, integrate_with, region_exit_time, Region};
use lps_core::harness::{
    execute, parse_config, run_fluid_experiment, run_ssc_experiment, run_workload_limit_experiment,
    FluidCase, ScalingSequence,
};
use lps_core::instances::{
    random_critical_spec, random_critical_spec_general, random_stable_spec, reference_spec,
};
use lps_core::linalg::{self, Vec2};
use lps_core::params::{derive_params, CriticalModel};
use lps_core::rng::{split_seed, RngStreams};
use lps_core::simulator::{run, sample_itinerary, workload_single_queue};
use lps_core::stats::{ks_statistic, Moments};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// 1. `W_Tot` equals the single-queue workload at every event epoch.
fn workload_identity() -> Outcome {
    const SPECS: usize = 100;
    const SEEDS: u64 = 10;
    const HORIZON: f64 = 1e3;
    const TOL: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let mut worst_lindley: f64 = 0.0;
    let mut epochs = 0usize;
    for s in 0..SPECS {
        let spec = random_stable_spec(&mut rng, true);
        for seed in 0..SEEDS {
            let trace = run(&spec, HORIZON, split_seed(1, &[s as u64, seed])).expect("simulation runs");
            for ((_, wg), r) in workload_single_queue(&trace).iter().zip(&trace.records) {
                worst = worst.max((wg - r.w_tot).abs());
            }
            // Lindley recursion on the admitted requirements alone: drain at
            // unit rate between epochs, jump by each arrival's total work.
            let (mut w, mut t, mut input) = (0.0_f64, 0.0, 0.0);
            for r in &trace.records {
                w = (w - (r.t - t)).max(0.0) + (r.input_work - input);
                t = r.t;
                input = r.input_work;
                worst_lindley = worst_lindley.max((w - r.w_tot).abs());
            }
            epochs += trace.records.len();
        }
    }
    outcome(
        worst <= TOL && worst_lindley <= TOL,
        format!(
            "{SPECS} specs x {SEEDS} seeds, {epochs} epochs, max |W_Tot - W_G| = {worst:.3e}, vs Lindley {worst_lindley:.3e} (tol {TOL:e})"
        ),
    )
}

/// 2. RK4 conserves the fluid workload.
fn fluid_conservation() -> Outcome {
    const STARTS: usize = 100;
    const TOL: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst: f64 = 0.0;
    for _ in 0..STARTS {
        let model = CriticalModel::from_spec(&random_critical_spec(&mut rng)).unwrap();
        let k = model.derived.k;
        let q0: Vec2 = [rng.random_range(0.0..4.0 * k[0]), rng.random_range(0.0..4.0 * k[1])];
        let w0 = model.workload(q0);
        integrate_with(q0, 100.0, 1e-3, &model.derived, |_, q| {
            worst = worst.max((model.workload(q) - w0).abs());
        })
        .unwrap();
    }
    outcome(worst <= TOL, format!("{STARTS} starts, max |tau.q(t) - tau.q(0)| = {worst:.3e} (tol {TOL:e})"))
}

fn sample_in(region: Region, k: Vec2, rng: &mut ChaCha8Rng) -> Vec2 {
    let below = |x: f64, rng: &mut ChaCha8Rng| rng.random_range(0.0..x);
    let above = |x: f64, rng: &mut ChaCha8Rng| rng.random_range(x..4.0 * x);
    match region {
        Region::Pi1 => [below(k[0], rng), above(k[1], rng)],
        Region::Pi2 => [above(k[0], rng), above(k[1], rng)],
        Region::Pi3 => [above(k[0], rng), below(k[1], rng)],
        Region::Pi4 => [below(k[0], rng), below(k[1], rng)],
    }
}

/// 3. Explicit region solutions equal RK4 on `y' = Xi min(y, K)` until exit.
fn explicit_equivalence() -> Outcome {
    const STARTS: usize = 50;
    const TOL: f64 = 1e-8;
    const HORIZON: f64 = 20.0;
    const DU: f64 = 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut parts = Vec::new();
    let mut pass = true;
    for region in [Region::Pi3, Region::Pi4] {
        let mut worst: f64 = 0.0;
        let mut exits = 0;
        for _ in 0..STARTS {
            let model = CriticalModel::from_spec(&random_critical_spec(&mut rng)).unwrap();
            let y0 = sample_in(region, model.derived.k, &mut rng);
            let exit = region_exit_time(region, y0, HORIZON, &model);
            exits += usize::from(exit.is_some());
            let until = exit.unwrap_or(f64::INFINITY);
            let numeric = integrate_time_changed(y0, HORIZON, DU, &model.derived).unwrap();
            for (u, s) in &numeric.points {
                if *u >= until {
                    break;
                }
                let exact = explicit_region(region, y0, *u, &model);
                worst = worst.max(linalg::max_abs_diff(exact, s.q));
            }
        }
        pass &= worst <= TOL;
        parts.push(format!("{}: {STARTS} starts ({exits} exit), sup err {worst:.3e}", region.label()));
    }
    outcome(pass, format!("{} (tol {TOL:e})", parts.join("; ")))
}

/// 4. Grid sweep at the certified horizon plus the case properties.
fn fluid_convergence() -> Outcome {
    let r = run_fluid_experiment(&reference_spec(), 10.0, 1e-3, 21, 1e-3).unwrap();
    let mut counts = BTreeMap::new();
    for s in &r.starts {
        let key = match s.case {
            FluidCase::Above => "above",
            FluidCase::Below => "below",
            FluidCase::Critical => "critical",
        };
        *counts.entry(key).or_insert(0) += 1;
    }
    outcome(
        r.pass,
        format!(
            "t0 = {:.3}, worst |Q(t0) - Delta(w0)| = {:.3e} (tol 1e-3) over {} starts {:?}; exit from upper regions <= {:.3} (bound {:.3}); case checks {}",
            r.horizon.t0,
            r.worst_distance,
            r.starts.len(),
            counts,
            r.worst_exit_time,
            r.exit_bound,
            if r.cases_ok { "hold" } else { "FAIL" }
        ),
    )
}

/// 5. Monte-Carlo moments of the total requirement against the matrix formulas.
fn moment_oracle() -> Outcome {
    const SPECS: usize = 20;
    const SAMPLES: usize = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut worst_z: f64 = 0.0;
    let mut misses = 0;
    let mut alt_rejected = 0;
    let mut routed = 0;
    for s in 0..SPECS {
        let spec = random_critical_spec_general(&mut rng);
        let d = derive_params(&spec).unwrap();
        // Alternative reading with an inner product: 2 (beta . P tau) in each row.
        let p_tau = linalg::mat_vec(&spec.routing, d.tau);
        let inner = 2.0 * linalg::dot(d.beta, p_tau);
        let ev2 = [spec.nodes[0].service.second_moment(), spec.nodes[1].service.second_moment()];
        let alt = linalg::solve(
            &linalg::sub(&linalg::IDENTITY, &spec.routing),
            [ev2[0] + inner, ev2[1] + inner],
        )
        .unwrap();
        for origin in 0..2 {
            let mut streams = RngStreams::new(split_seed(5, &[s as u64, origin as u64]));
            let mut m1 = Moments::default();
            let mut m2 = Moments::default();
            for _ in 0..SAMPLES {
                let total = sample_itinerary(&spec, origin, &mut streams).unwrap().total();
                m1.push(total);
                m2.push(total * total);
            }
            let z1 = (m1.mean() - d.tau[origin]) / m1.std_error();
            let z2 = (m2.mean() - d.tau2[origin]) / m2.std_error();
            for z in [z1, z2] {
                worst_z = worst_z.max(z.abs());
                misses += usize::from(z.abs() > 3.0);
            }
            if (alt[origin] - d.tau2[origin]).abs() > 1e-9 {
                routed += 1;
                let z_alt = (m2.mean() - alt[origin]) / m2.std_error();
                alt_rejected += usize::from(z_alt.abs() > 3.0);
            }
        }
    }
    outcome(
        misses == 0,
        format!(
            "{SPECS} specs x 2 origins x {SAMPLES} itineraries: {misses} of {} moments outside 3 SE (max |z| = {worst_z:.2}); inner-product reading rejected in {alt_rejected}/{routed}",
            4 * SPECS
        ),
    )
}

/// 6. The RBM transient cdf against Euler paths, and its stationary limit.
fn rbm_closed_form() -> Outcome {
    const PATHS: usize = 100_000;
    const DT: f64 = 1e-4;
    const KS_TOL: f64 = 0.02;
    let p = RbmParams::new(1.0, 2.0, 0.0).unwrap();
    let times = [0.5, 1.0, 5.0];
    let values = rbm_euler_checkpoints(&p, DT, &times, PATHS, 106).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (t, v) in times.iter().zip(&values) {
        let ks = ks_statistic(v, |x| rbm_transient_cdf(x, *t, &p).unwrap());
        pass &= ks <= KS_TOL;
        parts.push(format!("KS(t={t}) = {ks:.4}"));
    }
    // Discretization check at dt/2 for the shortest time.
    let half = rbm_euler_checkpoints(&p, DT / 2.0, &times[..1], PATHS, 106).unwrap();
    let ks_half = ks_statistic(&half[0], |x| rbm_transient_cdf(x, times[0], &p).unwrap());
    pass &= ks_half <= KS_TOL;
    parts.push(format!("KS(t=0.5, dt/2) = {ks_half:.4}"));
    let t_long = 50.0 * p.sigma2 / (p.theta * p.theta);
    let gap = (0..=2000)
        .map(|i| {
            let x = i as f64 * 0.01;
            (rbm_transient_cdf(x, t_long, &p).unwrap() - rbm_stationary_cdf(x, &p)).abs()
        })
        .fold(0.0, f64::max);
    pass &= gap <= 1e-4;
    parts.push(format!("sup |F(x, {t_long}) - F_stat(x)| = {gap:.2e}"));
    outcome(pass, format!("{PATHS} paths, dt {DT:e}: {} (tol {KS_TOL}, 1e-4)", parts.join(", ")))
}

/// 7. KS distance of the diffusion-scaled workload to the RBM law.
fn workload_limit() -> Outcome {
    const REPS: usize = 500;
    const BATCHES: usize = 101;
    let seq = ScalingSequence::new(&reference_spec(), 1.0, vec![10, 25, 50], [0.0, 0.0]).unwrap();
    let r = run_workload_limit_experiment(&seq, 1.0, REPS, BATCHES, false, 107).unwrap();
    let med = r.median_ks();
    let monotone = med.windows(2).all(|w| w[1] <= w[0]);
    let last = *med.last().unwrap();
    let pooled: Vec<String> = r.levels.iter().map(|l| format!("{:.4}", l.pooled_ks)).collect();
    outcome(
        monotone && last <= 0.05,
        format!(
            "t = 1, {REPS} reps x {BATCHES} batches: median KS by n {:?} = {:.4?} (nonincreasing: {monotone}, n=50 <= 0.05); pooled KS {pooled:?}",
            seq.n_values, med
        ),
    )
}

/// 8. State-space collapse: the SSC distance shrinks with n.
fn ssc() -> Outcome {
    const REPS: usize = 50;
    let seq = ScalingSequence::new(&reference_spec(), 1.0, vec![10, 25, 50], [1.0, 1.0]).unwrap();
    let r = run_ssc_experiment(&seq, 1.0, REPS, 108).unwrap();
    let med = r.medians();
    let decreasing = med.windows(2).all(|w| w[1] < w[0]);
    let iqr: Vec<String> = r.levels.iter().map(|l| format!("[{:.3}, {:.3}]", l.q1, l.q3)).collect();
    outcome(
        decreasing,
        format!("T = 1, {REPS} reps: median distance by n {:?} = {:.4?}, IQR {iqr:?}", seq.n_values, med),
    )
}

/// 9. Every shipped configuration reproduces its golden checksums, twice.
fn determinism() -> Outcome {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let golden = std::fs::read_to_string(root.join("golden.sha256")).unwrap_or_default();
    let expected: BTreeMap<&str, &str> = golden
        .lines()
        .filter_map(|l| l.split_once("  ").map(|(h, f)| (f, h)))
        .collect();
    let mut configs: Vec<_> = std::fs::read_dir(&root)
        .unwrap()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    configs.sort();
    let mut checked = 0;
    let mut problems = Vec::new();
    for path in &configs {
        let name = path.file_stem().unwrap().to_string_lossy().to_string();
        let config = parse_config(path).unwrap();
        let a = execute(&config, None).unwrap();
        let b = execute(&config, None).unwrap();
        let mut files = vec![("report.json".to_string(), a.report_json(), b.report_json())];
        for (x, y) in a.outputs.iter().zip(&b.outputs) {
            files.push((x.name.clone(), x.contents.clone(), y.contents.clone()));
        }
        for (file, x, y) in files {
            let key = format!("{name}/{file}");
            if x != y {
                problems.push(format!("{key} differs between runs"));
            }
            let digest: String = Sha256::digest(x.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
            match expected.get(key.as_str()) {
                Some(h) if *h == digest => checked += 1,
                Some(_) => problems.push(format!("{key} checksum mismatch")),
                None => problems.push(format!("{key} has no golden checksum")),
            }
        }
    }
    if expected.len() != checked + problems.iter().filter(|p| p.contains("mismatch")).count() {
        problems.push("golden file lists outputs that were not produced".into());
    }
    outcome(
        problems.is_empty() && checked > 0,
        format!("{} configs, {checked} outputs match golden checksums; problems: {problems:?}", configs.len()),
    )
}

fn main() {
    // Ignore libtest flags such as `--nocapture` passed through cargo.
    let only: Option<Vec<usize>> = std::env::var("LPS_ACCEPT")
        .ok()
        .map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let criteria: [(usize, &str, fn() -> Outcome); 9] = [
        (1, "workload identity", workload_identity),
        (2, "fluid conservation", fluid_conservation),
        (3, "explicit region solutions", explicit_equivalence),
        (4, "fluid convergence", fluid_convergence),
        (5, "moment oracle", moment_oracle),
        (6, "rbm closed form", rbm_closed_form),
        (7, "workload diffusion limit", workload_limit),
        (8, "state-space collapse", ssc),
        (9, "determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (id, name, check) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id} ({name}): {status} [{:.1}s] {}", start.elapsed().as_secs_f64(), o.detail);
        if !o.pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
    println!("acceptance: all selected criteria passed");
}
