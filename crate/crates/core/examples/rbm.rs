//! Reflected Brownian motion: closed-form cdf against Euler paths.
use lps_core::diffusion::{rbm_euler_checkpoints, rbm_stationary_cdf, rbm_transient_cdf, RbmParams};
use lps_core::stats::ks_statistic;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = RbmParams::new(1.0, 2.0, 0.0)?;
    let times = [0.5, 2.0];
    let paths = rbm_euler_checkpoints(&p, 1e-4, &times, 10_000, 9)?;
    for (t, v) in times.iter().zip(&paths) {
        let ks = ks_statistic(v, |x| rbm_transient_cdf(x, *t, &p).unwrap());
        println!("t = {t}: KS = {ks:.4}");
    }
    for x in [0.5, 1.0, 2.0] {
        println!("P(W(1) <= {x}) = {:.4}, stationary {:.4}", rbm_transient_cdf(x, 1.0, &p)?, rbm_stationary_cdf(x, &p));
    }
    Ok(())
}
