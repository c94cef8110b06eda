//! Simulates a routed network and checks the workload against the
//! single-server queue fed by the same total requirements.
use lps_core::instances::random_stable_spec;
use lps_core::simulator::{run_with, workload_single_queue, RunOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = random_stable_spec(&mut ChaCha8Rng::seed_from_u64(1), true);
    let opts = RunOptions { record_events: true, sample_dt: Some(10.0) };
    let trace = run_with(&spec, 1000.0, 42, &opts)?;
    let gap = workload_single_queue(&trace)
        .iter()
        .zip(&trace.records)
        .map(|((_, wg), r)| (wg - r.w_tot).abs())
        .fold(0.0, f64::max);
    println!("{} records, max workload gap {gap:.2e}", trace.records.len());
    for r in trace.samples().take(10) {
        println!("t = {:6.1}  q = {:?}  w_tot = {:.3}", r.t, r.q, r.w_tot);
    }
    Ok(())
}
