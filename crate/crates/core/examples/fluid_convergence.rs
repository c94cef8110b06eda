//! Fluid paths on the reference network collapse onto the invariant manifold.
use lps_core::fluid::{convergence_horizon, explicit_solution, integrate};
use lps_core::instances::reference_spec;
use lps_core::lifting::LiftingMap;
use lps_core::params::CriticalModel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = CriticalModel::from_spec(&reference_spec())?;
    let map = LiftingMap::new(&model);
    let h = convergence_horizon(10.0, 1e-3, &model)?;
    println!("certified horizon t0 = {:.2} for M = 10, eps = 1e-3", h.t0);
    for q0 in [[0.0, 6.0], [3.0, 3.0], [5.0, 3.0], [0.5, 0.5]] {
        let traj = integrate(q0, h.t0, 1e-3, &model.derived)?;
        let end = traj.last().q;
        let target = map.lift(traj.w0);
        println!("q0 = {q0:?}: Q(t0) = [{:.4}, {:.4}], lift = [{:.4}, {:.4}]", end[0], end[1], target[0], target[1]);
    }
    let explicit = explicit_solution([5.0, 3.0], 30.0, 1e-2, &model);
    let regions: Vec<_> = explicit.segments.iter().map(|(u, r)| format!("{} from u = {u:.3}", r.label())).collect();
    println!("explicit path from (5, 3): {}", regions.join(", "));
    Ok(())
}
