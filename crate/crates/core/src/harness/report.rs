use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{Config, FluidConfig, RbmConfig, SimulateConfig};
use super::experiments::{run_fluid_experiment, run_ssc_experiment, run_workload_limit_experiment};
use super::{thread_pool, ScalingSequence};
use crate::diffusion::{rbm_simulate, rbm_stationary_cdf, rbm_transient_cdf, RbmParams};
use crate::error::{Error, Result};
use crate::fluid::integrate;
use crate::lifting::LiftingMap;
use crate::params::{check_critical_loading, derive_params, canonicalize, CriticalModel, CRITICAL_TOL};
use crate::simulator::{run_with, workload_single_queue, RunOptions};

pub const REPORT_FILE: &str = "report.json";
/// Wall-clock data lives apart from the report so the report stays byte-stable.
pub const TIMING_FILE: &str = "timing.json";

/// A named output file held in memory.
#[derive(Clone, Debug, PartialEq)]
pub struct Output {
    pub name: String,
    pub contents: String,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: Value,
    pub outputs: Vec<Output>,
    pub elapsed_secs: f64,
    pub threads: usize,
}

impl RunOutcome {
    pub fn report_json(&self) -> String {
        serde_json::to_string_pretty(&self.report).expect("reports serialize") + "\n"
    }

    pub fn output(&self, name: &str) -> Option<&str> {
        self.outputs.iter().find(|o| o.name == name).map(|o| o.contents.as_str())
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("results serialize")
}

fn csv(name: &str, contents: String) -> Output {
    Output {
        name: name.to_string(),
        contents,
    }
}

/// Runs `config` (seed overridden by `seed` when given, else the config's
/// seed, else 0) on a worker pool capped by `LPS_THREADS`.
pub fn execute(config: &Config, seed: Option<u64>) -> Result<RunOutcome> {
    let mut config = config.clone();
    let seed = seed.or(config.seed()).unwrap_or(0);
    config.set_seed(seed);
    let pool = thread_pool()?;
    let start = Instant::now();
    let (results, outputs) = pool.install(|| run(&config, seed))?;
    let report = json!({
        "command": config.command(),
        "seed": seed,
        "config": to_value(&config),
        "results": results,
    });
    Ok(RunOutcome {
        report,
        outputs,
        elapsed_secs: start.elapsed().as_secs_f64(),
        threads: pool.current_num_threads(),
    })
}

fn run(config: &Config, seed: u64) -> Result<(Value, Vec<Output>)> {
    match config {
        Config::Params(c) => {
            let spec = c.network()?;
            let derived = derive_params(spec)?;
            let critical = check_critical_loading(&derived, CRITICAL_TOL);
            let lifting = match canonicalize(spec) {
                Ok((canonical, relabeling)) => CriticalModel::from_spec(&canonical)
                    .ok()
                    .map(|m| json!({"relabeling": relabeling, "map": LiftingMap::new(&m)})),
                Err(_) => None,
            };
            let results = json!({
                "spec_hash": spec.hash(),
                "derived": derived,
                "critical": critical,
                "lifting": lifting,
            });
            Ok((results, vec![]))
        }
        Config::Simulate(c) => simulate(c, seed),
        Config::Fluid(c) => fluid(c),
        Config::FluidConverge(c) => {
            let r = run_fluid_experiment(c.network()?, c.m, c.eps, c.grid_n, c.dt)?;
            let mut table = String::from("q1,q2,w0,case,distance,exit_time,case_ok\n");
            for s in &r.starts {
                let case = to_value(&s.case);
                let exit = s.exit_time.map_or(String::new(), |t| t.to_string());
                writeln!(
                    table,
                    "{},{},{},{},{},{},{}",
                    s.q0[0],
                    s.q0[1],
                    s.w0,
                    case.as_str().unwrap_or(""),
                    s.distance,
                    exit,
                    s.case_ok && s.monotone_exit
                )
                .unwrap();
            }
            let mut results = to_value(&r);
            results.as_object_mut().unwrap().remove("starts");
            Ok((results, vec![csv("grid.csv", table)]))
        }
        Config::Rbm(c) => rbm(c, seed),
        Config::Ssc(c) => {
            let seq = ScalingSequence::new(c.network()?, c.theta, c.n_values.clone(), c.q_bar0)?;
            let r = run_ssc_experiment(&seq, c.horizon, c.reps, seed)?;
            let mut table = String::from("n,rep,seed,distance\n");
            for l in &r.levels {
                for (rep, (d, s)) in l.distances.iter().zip(&l.seeds).enumerate() {
                    writeln!(table, "{},{rep},{s},{d}", l.n).unwrap();
                }
            }
            Ok((to_value(&r), vec![csv("ssc.csv", table)]))
        }
        Config::WorkloadLimit(c) => {
            let seq = ScalingSequence::new(c.network()?, c.theta, c.n_values.clone(), c.q_bar0)?;
            let r = run_workload_limit_experiment(&seq, c.t_probe, c.reps, c.batches, c.stationary, seed)?;
            let mut samples = String::from("n,batch,rep,w_hat\n");
            let mut ks = String::from("n,batch,ks\n");
            for l in &r.levels {
                for (i, w) in l.samples.iter().enumerate() {
                    writeln!(samples, "{},{},{},{w}", l.n, i / c.reps, i % c.reps).unwrap();
                }
                for (b, k) in l.ks.iter().enumerate() {
                    writeln!(ks, "{},{b},{k}", l.n).unwrap();
                }
            }
            let mut results = to_value(&r);
            for level in results["levels"].as_array_mut().unwrap() {
                level.as_object_mut().unwrap().remove("samples");
            }
            Ok((results, vec![csv("workload.csv", samples), csv("ks.csv", ks)]))
        }
    }
}

fn simulate(c: &SimulateConfig, seed: u64) -> Result<(Value, Vec<Output>)> {
    let spec = c.network()?;
    let record_events = c.record_events.unwrap_or(c.sample_dt.is_none());
    let opts = RunOptions {
        record_events,
        sample_dt: c.sample_dt,
    };
    let trace = run_with(spec, c.horizon, seed, &opts)?;
    let identity = workload_single_queue(&trace)
        .iter()
        .zip(&trace.records)
        .map(|((_, wg), r)| (wg - r.w_tot).abs())
        .fold(0.0, f64::max);
    let conservation = trace
        .records
        .iter()
        .map(|r| (r.busy[0] + r.busy[1] + r.idle - r.t).abs())
        .fold(0.0, f64::max);
    let mut buf = Vec::new();
    trace
        .write_csv(&mut buf, !record_events)
        .map_err(|e| Error::io("trace.csv", e))?;
    let results = json!({
        "spec_hash": trace.spec_hash,
        "horizon": trace.horizon,
        "records": trace.records.len(),
        "final": trace.records.last(),
        "max_workload_identity_error": identity,
        "max_work_conservation_error": conservation,
    });
    Ok((results, vec![csv("trace.csv", String::from_utf8(buf).expect("csv is utf-8"))]))
}

fn fluid(c: &FluidConfig) -> Result<(Value, Vec<Output>)> {
    let spec = c.network()?;
    let derived = derive_params(spec)?;
    let traj = integrate(c.q0, c.horizon, c.dt, &derived)?;
    // The equilibrium target only exists for critical instances with
    // node 1 as the bottleneck (in the spec's own labels).
    let target = CriticalModel::new(derived.clone())
        .ok()
        .map(|m| LiftingMap::new(&m).lift(traj.w0));
    let mut buf = Vec::new();
    traj.write_csv(&mut buf).map_err(|e| Error::io("traj.csv", e))?;
    let results = json!({
        "w0": traj.w0,
        "final_time": traj.points.last().map(|p| p.0),
        "final": traj.last(),
        "lifted_target": target,
        "max_conservation_error": traj.max_conservation_error(),
    });
    Ok((results, vec![csv("traj.csv", String::from_utf8(buf).expect("csv is utf-8"))]))
}

fn rbm(c: &RbmConfig, seed: u64) -> Result<(Value, Vec<Output>)> {
    let mut outputs = Vec::new();
    let path_params = RbmParams {
        theta: c.theta,
        sigma2: c.sigma2,
        w0: c.w0,
    };
    let p = RbmParams::new(c.theta, c.sigma2, c.w0);
    let mut rows = Vec::new();
    if !c.x.is_empty() {
        let p = p.as_ref().map_err(|e| Error::Config(e.to_string()))?;
        for &x in &c.x {
            let cdf = if c.stationary {
                rbm_stationary_cdf(x, p)
            } else {
                let t = c.t.ok_or_else(|| Error::Config("give `t` or set `stationary`".into()))?;
                rbm_transient_cdf(x, t, p)?
            };
            rows.push(json!({"x": x, "cdf": cdf, "tail": 1.0 - cdf}));
        }
    }
    if let Some(sim) = &c.simulate {
        let path = rbm_simulate(&path_params, sim.dt, sim.horizon, seed)?;
        let mut table = String::from("t,w\n");
        for (t, w) in path {
            writeln!(table, "{t},{w}").unwrap();
        }
        outputs.push(csv("path.csv", table));
    } else {
        p?;
    }
    let results = json!({
        "reference": if c.stationary { "stationary" } else { "transient" },
        "t": c.t,
        "probabilities": rows,
    });
    Ok((results, outputs))
}

/// Writes `report.json`, every output file and `timing.json` into `dir`.
pub fn emit_report(outcome: &RunOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: &str, contents: &str| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    put(REPORT_FILE, &outcome.report_json())?;
    for o in &outcome.outputs {
        put(&o.name, &o.contents)?;
    }
    let timing = json!({"elapsed_seconds": outcome.elapsed_secs, "threads": outcome.threads});
    put(TIMING_FILE, &(serde_json::to_string_pretty(&timing).unwrap() + "\n"))?;
    Ok(written)
}
