//! Joint queue-length tails of the heavy-traffic limit.
use lps_core::diffusion::{diffusion_params_from_spec, joint_tail, joint_tail_stationary};
use lps_core::instances::reference_spec;
use lps_core::lifting::LiftingMap;
use lps_core::params::CriticalModel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = reference_spec();
    let model = CriticalModel::from_spec(&spec)?;
    let map = LiftingMap::new(&model);
    let p = diffusion_params_from_spec(&spec, &model.derived, 1.0, [0.0, 0.0])?;
    println!("sigma^2 = {}, cap Q2 <= {}", p.sigma2, map.cap());
    for (x, y) in [(0.5, 0.5), (1.0, 0.5), (2.0, 0.8), (0.5, 0.95)] {
        println!(
            "P(Q1 > {x}, Q2 > {y}): t = 1 {:.4}, stationary {:.4}",
            joint_tail(x, y, 1.0, &p, &map)?,
            joint_tail_stationary(x, y, &p, &map)
        );
    }
    Ok(())
}
