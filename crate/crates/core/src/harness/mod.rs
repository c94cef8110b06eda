//! Heavy-traffic experiments, configuration files and reports.
//!
//! Replication `(n, rep)` of an experiment with master seed `s` simulates
//! with seed `split_seed(s, [n, rep])` (`[n, batch, rep]` for batched
//! experiments), so the report depends only on the configuration and the
//! master seed, never on the worker count or scheduling.

mod config;
mod experiments;
mod report;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::params::{canonicalize, CriticalModel, NetworkSpec, Relabeling};

pub use config::{
    parse_config, parse_config_str, Config, FluidConfig, FluidConvergeConfig, ParamsConfig,
    RbmConfig, SimulateConfig, SpecSource, SscConfig, WorkloadLimitConfig,
};
pub use experiments::{
    run_fluid_experiment, run_ssc_experiment, run_workload_limit_experiment, FluidCase,
    FluidReport, FluidStart, SscLevel, SscReport, WorkloadLevel, WorkloadReport,
};
pub use report::{emit_report, execute, Output, RunOutcome, REPORT_FILE, TIMING_FILE};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "LPS_THREADS";

/// A rayon pool with at most `LPS_THREADS` workers (default: all cores).
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
            if n == 0 {
                return Err(Error::Config(format!("{THREADS_ENV} must be at least 1")));
            }
            n.min(cores)
        }
        Err(_) => cores,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// The heavy-traffic sequence built from a critical base spec:
/// `lambda^n = lambda (1 - theta / n)`, `K^n = n K`, `q0^n = round(n q_bar0)`,
/// with service laws and routing unchanged.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingSequence {
    /// Base spec, relabeled so that node 1 is the bottleneck.
    pub base: NetworkSpec,
    pub relabeling: Relabeling,
    pub theta: f64,
    pub n_values: Vec<u32>,
    /// Limit of the scaled initial queue lengths, in canonical labels.
    pub q_bar0: Vec2,
    #[serde(skip)]
    pub model: CriticalModel,
}

impl ScalingSequence {
    pub fn new(base: &NetworkSpec, theta: f64, n_values: Vec<u32>, q_bar0: Vec2) -> Result<Self> {
        let (canonical, relabeling) = canonicalize(base)?;
        let model = CriticalModel::from_spec(&canonical)
            .map_err(|e| Error::Config(format!("base spec is not a valid critical instance: {e}")))?;
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::Config(format!("theta must be positive, got {theta}")));
        }
        if n_values.is_empty() || n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("n values must be nonempty and strictly increasing".into()));
        }
        if f64::from(n_values[0]) <= theta {
            return Err(Error::Config(format!(
                "every n must exceed theta = {theta} so that arrival rates stay positive"
            )));
        }
        if !(q_bar0[0] >= 0.0 && q_bar0[1] >= 0.0) {
            return Err(Error::Config(format!("q_bar0 must be >= 0, got {q_bar0:?}")));
        }
        let q_bar0 = match relabeling {
            Relabeling::Identity => q_bar0,
            Relabeling::Swapped => [q_bar0[1], q_bar0[0]],
        };
        Ok(ScalingSequence {
            base: canonical,
            relabeling,
            theta,
            n_values,
            q_bar0,
            model,
        })
    }

    /// The `n`-th system of the sequence.
    pub fn spec_for(&self, n: u32) -> NetworkSpec {
        let nf = f64::from(n);
        let mut spec = self.base.clone();
        let stretch = 1.0 / (1.0 - self.theta / nf);
        for node in &mut spec.nodes {
            node.interarrival = node.interarrival.as_ref().map(|d| d.scale_time(stretch));
        }
        spec.k = [nf * self.base.k[0], nf * self.base.k[1]];
        spec.q0 = [(nf * self.q_bar0[0]).round(), (nf * self.q_bar0[1]).round()];
        spec
    }
}
