//! Scaled workload at a fixed time against the reflected Brownian motion law.
use lps_core::harness::{run_workload_limit_experiment, ScalingSequence};
use lps_core::instances::reference_spec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seq = ScalingSequence::new(&reference_spec(), 1.0, vec![5, 10, 20], [0.0, 0.0])?;
    let report = run_workload_limit_experiment(&seq, 1.0, 400, 5, false, 8)?;
    for level in &report.levels {
        println!("n = {:3}: median KS {:.4}, mean {:.4}", level.n, level.median_ks, level.mean);
    }
    Ok(())
}
