use lps_core::diffusion::{rbm_simulate, RbmParams};

// Zeta(1/2) / sqrt(2 pi): the overshoot constant of a discretely monitored
// reflected walk. Euler paths sit this far (times sigma sqrt(dt)) low.
const EULER_SHIFT: f64 = 0.5826;

#[test]
fn time_average_matches_stationary_mean() {
    let p = RbmParams::new(1.0, 2.0, 1.0).unwrap();
    let dt = 1e-3;
    let path = rbm_simulate(&p, dt, 4e4, 31).unwrap();
    let mean = path.iter().map(|(_, w)| w).sum::<f64>() / path.len() as f64;
    let exact = p.sigma2 / (2.0 * p.theta);
    let expected = exact - EULER_SHIFT * (p.sigma2 * dt).sqrt();
    assert!((mean - expected).abs() < 0.05 * exact, "time average {mean}, expected {expected}");
}
