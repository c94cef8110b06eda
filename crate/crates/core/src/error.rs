use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    /// `I - P` is singular or the routing matrix does not describe an open network.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("unsupported distribution: {0}")]
    UnsupportedDistribution(String),

    #[error("no unique bottleneck: mu_j K_j / gamma_j = {ratios:?}")]
    NoUniqueBottleneck { ratios: [f64; 2] },

    #[error("network is not critically loaded: rho = {rho}")]
    NotCritical { rho: f64 },

    #[error("inconsistent parameters: {0}")]
    InconsistentParameters(String),

    /// `Psi` is undefined at the origin, which is absorbing for the fluid model.
    #[error("the fluid origin is absorbing; the drift is undefined at q = 0")]
    AtOrigin,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("itinerary exceeded {0} steps; check the routing matrix")]
    RunawayItinerary(usize),

    #[error("fluid integration step size failure after {retries} halvings (last dt = {dt})")]
    StepSize { retries: u32, dt: f64 },

    #[error("path alignment error: {0}")]
    Alignment(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
