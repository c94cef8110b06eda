use std::io::{self, Write};

use serde::Serialize;

use super::{total_workload, EventKind, SimState, Simulator};
use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::params::NetworkSpec;

/// Post-event snapshot of the system. `Q` is piecewise constant, the
/// workloads are piecewise linear, so the snapshot is exact at `t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub t: f64,
    pub event: EventKind,
    pub q: [usize; 2],
    pub w: Vec2,
    pub w_tot: f64,
    pub busy: Vec2,
    pub idle: f64,
    /// Cumulative total requirement of initial and external customers.
    pub input_work: f64,
    pub external: [u64; 2],
    pub arrivals: [u64; 2],
    pub departures: [u64; 2],
}

impl TraceRecord {
    pub fn snapshot(event: EventKind, st: &SimState) -> Self {
        TraceRecord {
            t: st.clock,
            event,
            q: st.q(),
            w: [st.immediate_workload(0), st.immediate_workload(1)],
            w_tot: total_workload(st),
            busy: st.busy,
            idle: st.idle,
            input_work: st.input_work,
            external: st.external,
            arrivals: st.arrivals,
            departures: st.departures,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct RunOptions {
    /// Record a snapshot after every arrival and completion.
    pub record_events: bool,
    /// Also record snapshots at `0, dt, 2 dt, ...` up to the horizon.
    pub sample_dt: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trace {
    pub seed: u64,
    pub horizon: f64,
    pub spec_hash: String,
    pub records: Vec<TraceRecord>,
}

pub const CSV_HEADER: &str = "t,q1,q2,w1,w2,w_tot,t1,t2,y_l2";

impl Trace {
    pub fn samples(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(|r| r.event == EventKind::Sample)
    }

    /// Writes `t,q1,q2,w1,w2,w_tot,t1,t2,y_l2`. With `samples_only` only the
    /// sample-grid rows are written.
    pub fn write_csv<W: Write>(&self, mut out: W, samples_only: bool) -> io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.records {
            if samples_only && r.event != EventKind::Sample {
                continue;
            }
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.t, r.q[0], r.q[1], r.w[0], r.w[1], r.w_tot, r.busy[0], r.busy[1], r.idle
            )?;
        }
        Ok(())
    }
}

/// Runs to `horizon`, recording every event.
pub fn run(spec: &NetworkSpec, horizon: f64, seed: u64) -> Result<Trace> {
    run_with(
        spec,
        horizon,
        seed,
        &RunOptions {
            record_events: true,
            sample_dt: None,
        },
    )
}

pub fn run_with(spec: &NetworkSpec, horizon: f64, seed: u64, opts: &RunOptions) -> Result<Trace> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::Domain(format!("horizon must be finite and >= 0, got {horizon}")));
    }
    if let Some(dt) = opts.sample_dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain(format!("sample dt must be positive, got {dt}")));
        }
    }
    let mut sim = Simulator::new(spec, seed)?;
    let mut records = Vec::new();
    if horizon > 0.0 {
        records.push(TraceRecord::snapshot(EventKind::Start, sim.state()));
        if let Some(dt) = opts.sample_dt {
            let count = (horizon / dt).floor() as u64;
            for k in 0..=count {
                advance_recording(&mut sim, k as f64 * dt, opts.record_events, &mut records)?;
                records.push(TraceRecord::snapshot(EventKind::Sample, sim.state()));
            }
        }
        advance_recording(&mut sim, horizon, opts.record_events, &mut records)?;
        records.push(TraceRecord::snapshot(EventKind::End, sim.state()));
    }
    Ok(Trace {
        seed,
        horizon,
        spec_hash: spec.hash(),
        records,
    })
}

fn advance_recording(
    sim: &mut Simulator,
    t: f64,
    record_events: bool,
    records: &mut Vec<TraceRecord>,
) -> Result<()> {
    sim.advance_to(t, |kind, st| {
        if record_events {
            records.push(TraceRecord::snapshot(kind, st));
        }
    })
}

/// Workload of the single-server queue fed by initial and external
/// customers with their total requirements:
/// `W_G(t) = sum of admitted s_i(j) - (T_1(t) + T_2(t))`.
pub fn workload_single_queue(trace: &Trace) -> Vec<(f64, f64)> {
    trace
        .records
        .iter()
        .map(|r| (r.t, r.input_work - (r.busy[0] + r.busy[1])))
        .collect()
}
