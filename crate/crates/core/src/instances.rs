//! Named and randomly generated network instances for tests, examples and
//! experiments.

use rand::Rng;

use crate::linalg::{self, Mat2, IDENTITY};
use crate::params::{Distribution, NetworkSpec, NodeSpec};

/// Poisson arrivals at rate 1/2 into each node, unit-rate exponential
/// services, no routing, `K = (1, 2)`. Critically loaded with node 1 as
/// the bottleneck; `w* = 2`.
pub fn reference_spec() -> NetworkSpec {
    NetworkSpec::markovian([0.5, 0.5], [1.0, 1.0], [[0.0; 2]; 2], [1.0, 2.0], [0.0, 0.0])
}

/// A distribution with the given mean from a randomly chosen family.
pub fn random_family<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Distribution {
    match rng.random_range(0..5) {
        0 => Distribution::exponential_with_mean(mean),
        1 => Distribution::Deterministic { value: mean },
        2 => {
            let low = mean * rng.random_range(0.0..0.9);
            Distribution::Uniform {
                low,
                high: 2.0 * mean - low,
            }
        }
        3 => {
            let shape = rng.random_range(2..=4);
            Distribution::Erlang {
                shape,
                rate: f64::from(shape) / mean,
            }
        }
        _ => {
            let p: f64 = rng.random_range(0.1..0.9);
            let m1 = mean * rng.random_range(0.2..0.9);
            let m2 = (mean - p * m1) / (1.0 - p);
            Distribution::Hyperexponential2 {
                p,
                rate1: 1.0 / m1,
                rate2: 1.0 / m2,
            }
        }
    }
}

/// Substochastic routing with every entry in `[0, 0.3)`, so the row sums
/// and the spectral radius stay below 0.6.
pub fn random_routing<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    let mut p = [[0.0; 2]; 2];
    for row in &mut p {
        for x in row.iter_mut() {
            *x = rng.random_range(0.0..0.3);
        }
    }
    p
}

fn build<R: Rng + ?Sized>(
    lambda: [f64; 2],
    mu: [f64; 2],
    routing: Mat2,
    k: [f64; 2],
    general: bool,
    rng: &mut R,
) -> NetworkSpec {
    let mut draw = |mean: f64| {
        if general {
            random_family(mean, rng)
        } else {
            Distribution::exponential_with_mean(mean)
        }
    };
    let nodes = [0, 1].map(|i| NodeSpec {
        interarrival: Some(draw(1.0 / lambda[i])),
        service: draw(1.0 / mu[i]),
    });
    NetworkSpec {
        nodes,
        routing,
        k,
        q0: [0.0, 0.0],
    }
}

/// Random critically loaded spec with node 1 as the unique bottleneck.
///
/// Service rates are chosen to complete critical loading: with a random
/// split `rho_1 + rho_2 = 1`, `mu_i = gamma_i / rho_i`. `K_2` exceeds the
/// tie value `(rho_2 / rho_1) K_1` by a factor of at least 1.5.
pub fn random_critical_spec<R: Rng + ?Sized>(rng: &mut R) -> NetworkSpec {
    critical(rng, false)
}

/// As [`random_critical_spec`] with randomly chosen distribution families.
pub fn random_critical_spec_general<R: Rng + ?Sized>(rng: &mut R) -> NetworkSpec {
    critical(rng, true)
}

fn critical<R: Rng + ?Sized>(rng: &mut R, general: bool) -> NetworkSpec {
    let lambda = [rng.random_range(0.2..1.0), rng.random_range(0.2..1.0)];
    let routing = random_routing(rng);
    let gamma = linalg::solve(&linalg::sub(&IDENTITY, &linalg::transpose(&routing)), lambda)
        .expect("routing has spectral radius below one");
    let rho1: f64 = rng.random_range(0.35..0.65);
    let rho = [rho1, 1.0 - rho1];
    let mu = [gamma[0] / rho[0], gamma[1] / rho[1]];
    let k1 = rng.random_range(0.5..3.0);
    let k2 = rho[1] / rho[0] * k1 * rng.random_range(1.5..3.0);
    build(lambda, mu, routing, [k1, k2], general, rng)
}

/// Random spec with total load in `[0.3, 0.9)`. Queues stay small, which
/// keeps long event-by-event checks cheap.
pub fn random_stable_spec<R: Rng + ?Sized>(rng: &mut R, general: bool) -> NetworkSpec {
    let lambda = [rng.random_range(0.2..1.0), rng.random_range(0.2..1.0)];
    let routing = random_routing(rng);
    let gamma = linalg::solve(&linalg::sub(&IDENTITY, &linalg::transpose(&routing)), lambda)
        .expect("routing has spectral radius below one");
    let load: f64 = rng.random_range(0.3..0.9);
    let split: f64 = rng.random_range(0.2..0.8);
    let mu = [gamma[0] / (load * split), gamma[1] / (load * (1.0 - split))];
    let k = [rng.random_range(0.5..4.0), rng.random_range(0.5..4.0)];
    build(lambda, mu, routing, k, general, rng)
}
