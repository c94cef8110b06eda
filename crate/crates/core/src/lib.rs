//! Simulation and heavy-traffic analysis of a two-layer queueing network
//! with limited processor sharing.
//!
//! Layer 1 is a pair of FIFO single-server nodes with renewal arrivals,
//! general service requirements and Markovian routing. Layer 2 is one unit
//! speed server shared by the two layer-1 servers according to
//! `R_i(q) = min(q_i, K_i) / sum_j min(q_j, K_j)`.
//!
//! The crate is organized by analysis layer:
//!
//! - [`params`]: network primitives and derived constants.
//! - [`allocation`]: the limited processor-sharing rates.
//! - [`simulator`]: exact discrete-event simulation with total-workload
//!   bookkeeping.
//! - [`fluid`]: the critical fluid model, its time-changed linear form and
//!   explicit region solutions.
//! - [`lifting`]: the invariant manifold and the lifting map from workload
//!   to queue lengths.
//! - [`diffusion`]: the reflected Brownian motion workload limit.
//! - [`harness`]: heavy-traffic experiments, configuration and reports.

pub mod allocation;
pub mod diffusion;
pub mod error;
pub mod fluid;
pub mod harness;
pub mod instances;
pub mod lifting;
pub mod linalg;
pub mod params;
pub mod rng;
pub mod simulator;
pub mod stats;

pub use error::{Error, Result};
pub use linalg::{Mat2, Vec2};
pub use params::{derive_params, CriticalModel, DerivedParams, Distribution, NetworkSpec};
