//! `lps`: thin front end over `lps_core::harness`.
//!
//! Every subcommand runs either from `--config FILE` (outputs go to the
//! directory `--out`, default `out/`) or from flags (the report goes to
//! stdout and the main CSV to `--out` when given).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use lps_core::harness::{emit_report, execute, parse_config, parse_config_str, RunOutcome};
use serde_json::{json, Map, Value};

#[derive(Parser)]
#[command(name = "lps", version, about = "Two-layer limited processor sharing networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration; replaces the per-command flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Network description (JSON).
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory with --config, otherwise the CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Derived parameters, loading check and lifting map.
    Params {
        #[command(flatten)]
        common: Common,
    },
    /// Discrete-event simulation of the network.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        sample_dt: Option<f64>,
        /// Record every event instead of a sampling grid.
        #[arg(long)]
        record_events: bool,
    },
    /// Fluid trajectory from one start.
    Fluid {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = pair)]
        q0: Option<[f64; 2]>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Convergence horizon and grid sweep.
    FluidConverge {
        #[command(flatten)]
        common: Common,
        #[arg(long = "M")]
        m: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        grid_n: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Reflected Brownian motion probabilities and paths.
    Rbm {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        sigma2: Option<f64>,
        #[arg(long)]
        w0: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        stationary: bool,
        /// Levels at which to evaluate the cdf (comma separated).
        #[arg(long, value_delimiter = ',')]
        x: Vec<f64>,
        /// Emit a simulated path.
        #[arg(long)]
        simulate: bool,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
    },
    /// State-space collapse experiment.
    Ssc {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scaling: Scaling,
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Workload diffusion-limit experiment.
    WorkloadLimit {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scaling: Scaling,
        #[arg(long)]
        t_probe: Option<f64>,
        #[arg(long)]
        batches: Option<usize>,
        #[arg(long)]
        stationary: bool,
    },
}

#[derive(Args)]
struct Scaling {
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    n_values: Vec<u32>,
    #[arg(long, value_parser = pair)]
    q_bar0: Option<[f64; 2]>,
    #[arg(long)]
    reps: Option<usize>,
}

fn pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [a, b] => Ok([
            a.trim().parse().map_err(|e| format!("{a}: {e}"))?,
            b.trim().parse().map_err(|e| format!("{b}: {e}"))?,
        ]),
        _ => Err(format!("expected two comma-separated numbers, got `{s}`")),
    }
}

/// Collects the flags that were given into a configuration object.
struct Fields(Map<String, Value>);

impl Fields {
    fn new(command: &str, common: &Common) -> Self {
        let mut m = Map::new();
        m.insert("command".into(), json!(command));
        if let Some(spec) = &common.spec {
            let abs = std::path::absolute(spec).unwrap_or_else(|_| spec.clone());
            m.insert("spec_file".into(), json!(abs));
        }
        Fields(m)
    }

    fn put<T: serde::Serialize>(mut self, key: &str, value: Option<T>) -> Self {
        if let Some(v) = value {
            self.0.insert(key.into(), json!(v));
        }
        self
    }

    fn flag(self, key: &str, on: bool) -> Self {
        self.put(key, on.then_some(true))
    }
}

fn split(command: Command) -> (Common, Fields) {
    match command {
        Command::Params { common } => {
            let f = Fields::new("params", &common);
            (common, f)
        }
        Command::Simulate { common, horizon, sample_dt, record_events } => {
            let f = Fields::new("simulate", &common)
                .put("horizon", horizon)
                .put("sample_dt", sample_dt)
                .flag("record_events", record_events);
            (common, f)
        }
        Command::Fluid { common, q0, horizon, dt } => {
            let f = Fields::new("fluid", &common).put("q0", q0).put("horizon", horizon).put("dt", dt);
            (common, f)
        }
        Command::FluidConverge { common, m, eps, grid_n, dt } => {
            let f = Fields::new("fluid-converge", &common)
                .put("M", m)
                .put("eps", eps)
                .put("grid_n", grid_n)
                .put("dt", dt);
            (common, f)
        }
        Command::Rbm { common, theta, sigma2, w0, t, stationary, x, simulate, dt, horizon } => {
            let mut m = Map::new();
            m.insert("command".into(), json!("rbm"));
            let f = Fields(m)
                .put("theta", theta)
                .put("sigma2", sigma2)
                .put("w0", w0)
                .put("t", t)
                .flag("stationary", stationary)
                .put("x", (!x.is_empty()).then_some(x))
                .put("simulate", simulate.then(|| json!({"dt": dt, "horizon": horizon})));
            (common, f)
        }
        Command::Ssc { common, scaling, horizon } => {
            let f = scaled(Fields::new("ssc", &common), scaling).put("horizon", horizon);
            (common, f)
        }
        Command::WorkloadLimit { common, scaling, t_probe, batches, stationary } => {
            let f = scaled(Fields::new("workload-limit", &common), scaling)
                .put("t_probe", t_probe)
                .put("batches", batches)
                .flag("stationary", stationary);
            (common, f)
        }
    }
}

fn scaled(f: Fields, s: Scaling) -> Fields {
    f.put("theta", s.theta)
        .put("n_values", (!s.n_values.is_empty()).then_some(s.n_values))
        .put("q_bar0", s.q_bar0)
        .put("reps", s.reps)
}

fn primary_output(outcome: &RunOutcome) -> Option<&str> {
    outcome.outputs.first().map(|o| o.contents.as_str())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (common, fields) = split(cli.command);
    if let Some(path) = &common.config {
        if fields.0.len() > 2 || common.spec.is_some() {
            bail!("--config replaces the per-command flags; give only --seed and --out with it");
        }
        let config = parse_config(path)?;
        let wanted = fields.0["command"].as_str().unwrap_or_default();
        if config.command() != wanted {
            bail!("{} holds a `{}` configuration, not `{wanted}`", path.display(), config.command());
        }
        let outcome = execute(&config, common.seed)?;
        let dir = common.out.unwrap_or_else(|| PathBuf::from("out"));
        for written in emit_report(&outcome, &dir)? {
            eprintln!("wrote {}", written.display());
        }
        return Ok(());
    }
    let text = serde_json::to_string(&Value::Object(fields.0))?;
    let config = parse_config_str(&text, "command line", Path::new("."))?;
    let outcome = execute(&config, common.seed)?;
    print!("{}", outcome.report_json());
    if let Some(out) = &common.out {
        let contents = primary_output(&outcome).context("this command produces no CSV output")?;
        std::fs::write(out, contents).with_context(|| format!("writing {}", out.display()))?;
        eprintln!("wrote {}", out.display());
    }
    Ok(())
}
