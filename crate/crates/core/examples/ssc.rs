//! State-space collapse along a heavy-traffic sequence.
use lps_core::harness::{run_ssc_experiment, ScalingSequence};
use lps_core::instances::reference_spec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seq = ScalingSequence::new(&reference_spec(), 1.0, vec![5, 10, 20, 40], [1.0, 1.0])?;
    let report = run_ssc_experiment(&seq, 1.0, 20, 3)?;
    for level in &report.levels {
        println!("n = {:3}: median distance {:.4} (IQR {:.4} .. {:.4})", level.n, level.median, level.q1, level.q3);
    }
    Ok(())
}
