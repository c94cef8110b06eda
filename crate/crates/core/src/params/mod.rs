//! Network primitives and every constant derived from them.

mod distribution;

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use distribution::Distribution;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, Vec2, IDENTITY};

/// Relative tolerance used to decide whether two bottleneck ratios tie.
pub const BOTTLENECK_TIE_TOL: f64 = 1e-9;

/// Tolerance on `|rho - 1|` accepted as critical loading.
pub const CRITICAL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    /// External inter-arrival law; `null` means the node has no external
    /// arrivals (it may still receive routed customers).
    pub interarrival: Option<Distribution>,
    pub service: Distribution,
}

/// User-supplied primitives of the two-node network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub nodes: [NodeSpec; 2],
    /// Substochastic routing matrix; `routing[i][l]` is the probability
    /// that a customer finishing at node `i` moves to node `l`.
    pub routing: Mat2,
    /// Degree of resource sharing.
    #[serde(rename = "K")]
    pub k: Vec2,
    /// Initial queue lengths. Must be integral for simulation.
    pub q0: Vec2,
}

impl NetworkSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: NetworkSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json(inner) => Error::Config(format!("{}: {inner}", path.display())),
            other => other,
        })
    }

    /// Poisson arrivals and exponential services with the given rates.
    pub fn markovian(lambda: Vec2, mu: Vec2, routing: Mat2, k: Vec2, q0: Vec2) -> Self {
        let node = |i: usize| NodeSpec {
            interarrival: (lambda[i] > 0.0).then_some(Distribution::Exponential { rate: lambda[i] }),
            service: Distribution::Exponential { rate: mu[i] },
        };
        NetworkSpec {
            nodes: [node(0), node(1)],
            routing,
            k,
            q0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, node) in self.nodes.iter().enumerate() {
            if let Some(d) = &node.interarrival {
                d.validate()?;
            }
            node.service.validate()?;
            if !(self.k[i].is_finite() && self.k[i] > 0.0) {
                return Err(Error::InvalidSpec(format!("K[{i}] must be positive")));
            }
            if !(self.q0[i].is_finite() && self.q0[i] >= 0.0) {
                return Err(Error::InvalidSpec(format!("q0[{i}] must be nonnegative")));
            }
        }
        for (i, row) in self.routing.iter().enumerate() {
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::InvalidSpec(format!(
                    "routing row {i} has a negative or non-finite entry"
                )));
            }
            if row[0] + row[1] > 1.0 + 1e-12 {
                return Err(Error::InvalidSpec(format!("routing row {i} sums above one")));
            }
        }
        let radius = linalg::spectral_radius_nonneg(&self.routing);
        if radius >= 1.0 - 1e-12 {
            return Err(Error::Structural(format!(
                "routing matrix has spectral radius {radius} >= 1"
            )));
        }
        Ok(())
    }

    pub fn lambda(&self) -> Vec2 {
        let rate = |n: &NodeSpec| n.interarrival.as_ref().map_or(0.0, |d| 1.0 / d.mean());
        [rate(&self.nodes[0]), rate(&self.nodes[1])]
    }

    pub fn beta(&self) -> Vec2 {
        [self.nodes[0].service.mean(), self.nodes[1].service.mean()]
    }

    pub fn mu(&self) -> Vec2 {
        let b = self.beta();
        [1.0 / b[0], 1.0 / b[1]]
    }

    /// Swaps the labels of the two nodes.
    pub fn swapped(&self) -> Self {
        let p = &self.routing;
        NetworkSpec {
            nodes: [self.nodes[1].clone(), self.nodes[0].clone()],
            routing: [[p[1][1], p[1][0]], [p[0][1], p[0][0]]],
            k: [self.k[1], self.k[0]],
            q0: [self.q0[1], self.q0[0]],
        }
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serializes");
        hex_digest(&Sha256::digest(&bytes))
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Node relabeling applied to put the bottleneck at index 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relabeling {
    Identity,
    Swapped,
}

/// Returns a copy of `spec` whose unique bottleneck is node 1 (index 0).
pub fn canonicalize(spec: &NetworkSpec) -> Result<(NetworkSpec, Relabeling)> {
    let derived = derive_params(spec)?;
    match bottleneck(&derived, spec.k)? {
        0 => Ok((spec.clone(), Relabeling::Identity)),
        _ => Ok((spec.swapped(), Relabeling::Swapped)),
    }
}

/// Constants computed from a [`NetworkSpec`]. Vectors are indexed by node
/// (0-based). Fields that only make sense under critical loading with node 1
/// as the bottleneck (`x_star`, `w_star`, `xi`, `alpha2`, `eps1`) are always
/// computed; [`build_xi`] and [`CriticalModel`] check that they are valid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivedParams {
    pub lambda: Vec2,
    pub mu: Vec2,
    pub beta: Vec2,
    pub routing: Mat2,
    pub k: Vec2,
    pub gamma: Vec2,
    pub rho: Vec2,
    pub rho_total: f64,
    pub tau: Vec2,
    pub tau2: Vec2,
    pub sigma_s2: Vec2,
    pub c_u2: Vec2,
    pub sigma2: f64,
    /// `None` when the bottleneck ratios tie.
    pub bottleneck: Option<usize>,
    pub x_star: Vec2,
    pub w_star: f64,
    pub xi: Mat2,
    pub alpha2: f64,
    pub eps1: f64,
}

pub fn derive_params(spec: &NetworkSpec) -> Result<DerivedParams> {
    spec.validate()?;
    let lambda = spec.lambda();
    let beta = spec.beta();
    let mu = spec.mu();
    let p = spec.routing;
    let pt = linalg::transpose(&p);

    let singular = || Error::Structural("I - P is singular".into());
    let gamma = linalg::solve(&linalg::sub(&IDENTITY, &pt), lambda).ok_or_else(singular)?;
    let i_minus_p = linalg::sub(&IDENTITY, &p);
    let tau = linalg::solve(&i_minus_p, beta).ok_or_else(singular)?;

    let ev2 = [
        spec.nodes[0].service.second_moment(),
        spec.nodes[1].service.second_moment(),
    ];
    let p_tau = linalg::mat_vec(&p, tau);
    let rhs = [
        ev2[0] + 2.0 * beta[0] * p_tau[0],
        ev2[1] + 2.0 * beta[1] * p_tau[1],
    ];
    let tau2 = linalg::solve(&i_minus_p, rhs).ok_or_else(singular)?;
    if !(tau2[0].is_finite() && tau2[1].is_finite()) {
        return Err(Error::UnsupportedDistribution(
            "second moment of total requirement is not finite".into(),
        ));
    }
    let sigma_s2 = [
        (tau2[0] - tau[0] * tau[0]).max(0.0),
        (tau2[1] - tau[1] * tau[1]).max(0.0),
    ];
    let c_u2 = [0, 1].map(|i| spec.nodes[i].interarrival.as_ref().map_or(0.0, |d| d.scv()));
    let sigma2 = (0..2)
        .map(|i| lambda[i] * sigma_s2[i] + tau[i] * tau[i] * lambda[i] * c_u2[i])
        .sum();

    let rho = [gamma[0] / mu[0], gamma[1] / mu[1]];
    let rho_total = rho[0] + rho[1];
    let k = spec.k;

    let x_star = [k[0], (mu[0] * gamma[1]) / (gamma[0] * mu[1]) * k[0]];
    let w_star = linalg::dot(tau, x_star);
    let xi = [
        [lambda[0] + mu[0] * p[0][0] - mu[0], lambda[0] + mu[1] * p[1][0]],
        [lambda[1] + mu[0] * p[0][1], lambda[1] + mu[1] * p[1][1] - mu[1]],
    ];
    let alpha2 = xi[0][0] + xi[1][1];
    let eps1 = (tau[0] / tau[1]) * xi[0][1] * (k[1] - (rho[1] / rho[0]) * k[0]);

    let mut derived = DerivedParams {
        lambda,
        mu,
        beta,
        routing: p,
        k,
        gamma,
        rho,
        rho_total,
        tau,
        tau2,
        sigma_s2,
        c_u2,
        sigma2,
        bottleneck: None,
        x_star,
        w_star,
        xi,
        alpha2,
        eps1,
    };
    derived.bottleneck = bottleneck(&derived, k).ok();
    Ok(derived)
}

/// Index of the node minimizing `mu_j K_j / gamma_j`.
pub fn bottleneck(derived: &DerivedParams, k: Vec2) -> Result<usize> {
    let ratio = |j: usize| {
        if derived.gamma[j] > 0.0 {
            derived.mu[j] * k[j] / derived.gamma[j]
        } else {
            f64::INFINITY
        }
    };
    let ratios = [ratio(0), ratio(1)];
    if ratios[0].is_infinite() && ratios[1].is_infinite() {
        return Err(Error::NoUniqueBottleneck { ratios });
    }
    let scale = ratios[0].min(ratios[1]);
    if (ratios[0] - ratios[1]).abs() <= BOTTLENECK_TIE_TOL * scale {
        return Err(Error::NoUniqueBottleneck { ratios });
    }
    Ok(if ratios[0] < ratios[1] { 0 } else { 1 })
}

pub fn check_critical_loading(derived: &DerivedParams, tol: f64) -> bool {
    (derived.rho[0] + derived.rho[1] - 1.0).abs() <= tol
}

/// The time-changed linear dynamics `y' = Xi min(y, K)` and its rate constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct XiData {
    pub xi: Mat2,
    pub alpha2: f64,
    pub eps1: f64,
}

pub fn build_xi(derived: &DerivedParams) -> Result<XiData> {
    if !check_critical_loading(derived, CRITICAL_TOL) {
        return Err(Error::NotCritical {
            rho: derived.rho_total,
        });
    }
    if !(derived.alpha2 < 0.0) {
        return Err(Error::InconsistentParameters(format!(
            "alpha2 = {} is not negative",
            derived.alpha2
        )));
    }
    if !(derived.eps1 > 0.0) {
        return Err(Error::InconsistentParameters(format!(
            "eps1 = {} is not positive (is node 1 the bottleneck?)",
            derived.eps1
        )));
    }
    Ok(XiData {
        xi: derived.xi,
        alpha2: derived.alpha2,
        eps1: derived.eps1,
    })
}

/// A critically loaded network whose unique bottleneck is node 1.
/// This is the setting of the fluid, lifting and diffusion analysis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalModel {
    pub derived: DerivedParams,
    pub xi: XiData,
}

impl CriticalModel {
    pub fn new(derived: DerivedParams) -> Result<Self> {
        match bottleneck(&derived, derived.k)? {
            0 => {}
            _ => {
                return Err(Error::InconsistentParameters(
                    "node 2 is the bottleneck; canonicalize the spec first".into(),
                ))
            }
        }
        let xi = build_xi(&derived)?;
        Ok(CriticalModel { derived, xi })
    }

    pub fn from_spec(spec: &NetworkSpec) -> Result<Self> {
        Self::new(derive_params(spec)?)
    }

    /// `rho_2 / rho_1`, the slope of the invariant manifold below the kink.
    pub fn rho_ratio(&self) -> f64 {
        self.derived.rho[1] / self.derived.rho[0]
    }

    pub fn workload(&self, q: Vec2) -> f64 {
        linalg::dot(self.derived.tau, q)
    }
}
