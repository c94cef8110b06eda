//! Derived quantities for a network given as JSON (default: the reference
//! network). `cargo run --example derive_params -- configs/networks/routed.json`
use lps_core::instances::reference_spec;
use lps_core::params::{check_critical_loading, derive_params, NetworkSpec, CRITICAL_TOL};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = match std::env::args().nth(1) {
        Some(path) => NetworkSpec::from_file(path.as_ref())?,
        None => reference_spec(),
    };
    let d = derive_params(&spec)?;
    println!("gamma = {:?}, rho = {:?} (total {:.4})", d.gamma, d.rho, d.rho_total);
    println!("tau = {:?}, tau2 = {:?}", d.tau, d.tau2);
    println!("sigma^2 = {:.6}", d.sigma2);
    if check_critical_loading(&d, CRITICAL_TOL) {
        println!("critical: x* = {:?}, w* = {:.4}, xi = {:?}", d.x_star, d.w_star, d.xi);
    } else {
        println!("not critically loaded");
    }
    Ok(())
}
