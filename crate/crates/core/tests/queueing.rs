//! Long-run simulator averages against textbook queueing results.

use lps_core::instances::random_stable_spec;
use lps_core::params::{derive_params, NetworkSpec};
use lps_core::simulator::{run_with, RunOptions, Trace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const HORIZON: f64 = 2e5;

fn events(spec: &NetworkSpec, seed: u64) -> Trace {
    let opts = RunOptions {
        record_events: true,
        sample_dt: None,
    };
    run_with(spec, HORIZON, seed, &opts).unwrap()
}

/// Time average of `f(q)` over the recorded path (piecewise constant).
fn time_average(trace: &Trace, f: impl Fn([usize; 2]) -> f64) -> f64 {
    let area: f64 = trace.records.windows(2).map(|w| (w[1].t - w[0].t) * f(w[0].q)).sum();
    area / trace.records.last().unwrap().t
}

#[test]
fn exponential_services_give_mm1_population() {
    // Work-conserving single server with equal exponential rates: the total
    // population is that of an M/M/1 queue with load 0.5, mean 1.
    for (lambda, k) in [([0.5, 0.0], [1.0, 1.0]), ([0.3, 0.2], [1.0, 2.0]), ([0.25, 0.25], [4.0, 4.0])] {
        let spec = NetworkSpec::markovian(lambda, [1.0, 1.0], [[0.0; 2]; 2], k, [0.0, 0.0]);
        let trace = events(&spec, 17);
        let mean = time_average(&trace, |q| (q[0] + q[1]) as f64);
        assert!((mean - 1.0).abs() < 0.06, "{lambda:?} {k:?}: mean population {mean}");
    }
}

#[test]
fn idle_fraction_and_throughput_match_traffic_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for i in 0..5 {
        let spec = random_stable_spec(&mut rng, true);
        let d = derive_params(&spec).unwrap();
        let trace = events(&spec, i);
        let last = trace.records.last().unwrap();
        let idle = last.idle / last.t;
        assert!((idle - (1.0 - d.rho_total)).abs() < 0.02, "idle {idle} vs {}", 1.0 - d.rho_total);
        for node in 0..2 {
            let rate = last.arrivals[node] as f64 / last.t;
            let rel = (rate - d.gamma[node]).abs() / d.gamma[node].max(1e-12);
            assert!(rel < 0.03, "node {node}: throughput {rate} vs {}", d.gamma[node]);
        }
    }
}

#[test]
fn same_seed_same_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let spec = random_stable_spec(&mut rng, true);
    let opts = RunOptions {
        record_events: true,
        sample_dt: Some(0.5),
    };
    let a = run_with(&spec, 500.0, 4, &opts).unwrap();
    let b = run_with(&spec, 500.0, 4, &opts).unwrap();
    let c = run_with(&spec, 500.0, 5, &opts).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.records, c.records);
}
