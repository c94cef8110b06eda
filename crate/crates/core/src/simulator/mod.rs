//! Exact event-driven simulation of the two-layer network.
//!
//! Between events the allocation `R(Q)` is constant, so the head-of-line
//! customer at node `i` loses remaining work at rate `R_i(Q)` and every
//! completion time is known in closed form. Customers carry their whole
//! itinerary from admission on, which makes the total workload (including
//! future visits) an exact function of the state.

mod itinerary;
mod trace;

use std::collections::VecDeque;

use serde::Serialize;

pub use itinerary::{sample_itinerary, Itinerary, Step, MAX_ITINERARY_STEPS};
pub use trace::{run, run_with, workload_single_queue, RunOptions, Trace, TraceRecord};

use crate::allocation::{allocate, RateVector};
use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::params::NetworkSpec;
use crate::rng::RngStreams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Start,
    Arrival(usize),
    Completion(usize),
    Sample,
    End,
}

/// A customer sitting at some node, positioned at step `pos` of its route.
#[derive(Clone, Debug)]
pub struct Customer {
    steps: Vec<Step>,
    pos: usize,
    future: f64,
    entered_at: f64,
}

impl Customer {
    fn new(itinerary: Itinerary, now: f64) -> Self {
        let mut c = Customer {
            steps: itinerary.steps,
            pos: 0,
            future: 0.0,
            entered_at: now,
        };
        c.refresh_future();
        c
    }

    fn refresh_future(&mut self) {
        self.future = self.steps[self.pos + 1..].iter().map(|s| s.requirement).sum();
    }

    /// Requirement of the visit in progress (or waiting) at this node.
    pub fn immediate(&self) -> f64 {
        self.steps[self.pos].requirement
    }

    /// Requirement of all later visits.
    pub fn future(&self) -> f64 {
        self.future
    }

    pub fn node(&self) -> usize {
        self.steps[self.pos].node
    }
}

/// Full simulator state. Counters follow the usual notation: `external`
/// is `E_i`, `arrivals` is `A_i` (external plus routed), `busy` is the
/// cumulative effort `T_i` and `idle` the layer-2 idle time `Y_{L2}`.
#[derive(Clone, Debug)]
pub struct SimState {
    pub clock: f64,
    queues: [VecDeque<Customer>; 2],
    /// Remaining work of the head-of-line customer (0 when the node is empty).
    pub hol_remaining: Vec2,
    pub next_arrival: Vec2,
    pub busy: Vec2,
    pub idle: f64,
    pub external: [u64; 2],
    pub arrivals: [u64; 2],
    pub departures: [u64; 2],
    /// `V_i(S_i(T_i(t)))`: immediate requirements of all completed visits.
    pub served_work: Vec2,
    /// Total requirement `s` of every initial and external customer admitted so far.
    pub input_work: f64,
    /// Integral of `Q_i` over `[0, clock]`.
    pub queue_area: Vec2,
    /// Sum of sojourn times of completed visits.
    pub sojourn_total: Vec2,
}

impl SimState {
    pub fn queue_len(&self, node: usize) -> usize {
        self.queues[node].len()
    }

    pub fn q(&self) -> [usize; 2] {
        [self.queues[0].len(), self.queues[1].len()]
    }

    pub fn q_f64(&self) -> Vec2 {
        [self.queues[0].len() as f64, self.queues[1].len() as f64]
    }

    pub fn customers(&self, node: usize) -> impl Iterator<Item = &Customer> {
        self.queues[node].iter()
    }

    pub fn rates(&self, k: Vec2) -> RateVector {
        allocate(self.q_f64(), k)
    }

    /// Immediate workload `W_i`: remaining head-of-line work plus the
    /// current-visit requirements of everyone waiting behind it.
    pub fn immediate_workload(&self, node: usize) -> f64 {
        let waiting: f64 = self.queues[node].iter().skip(1).map(Customer::immediate).sum();
        if self.queues[node].is_empty() {
            0.0
        } else {
            self.hol_remaining[node] + waiting
        }
    }

    pub fn work_conservation_error(&self) -> f64 {
        (self.busy[0] + self.busy[1] + self.idle - self.clock).abs()
    }

    /// Head-of-line bound `V_i(S_i) <= T_i < V_i(S_i + 1)`.
    pub fn hl_bound_holds(&self, tol: f64) -> bool {
        (0..2).all(|i| {
            let lower = self.served_work[i] <= self.busy[i] + tol;
            let upper = match self.queues[i].front() {
                Some(c) => self.busy[i] < self.served_work[i] + c.immediate() + tol,
                None => (self.busy[i] - self.served_work[i]).abs() <= tol,
            };
            lower && upper
        })
    }
}

/// Total workload: immediate workload at both nodes plus the future
/// requirement of every customer present.
pub fn total_workload(state: &SimState) -> f64 {
    (0..2)
        .map(|i| {
            let future: f64 = state.queues[i].iter().map(Customer::future).sum();
            state.immediate_workload(i) + future
        })
        .sum()
}

pub struct Simulator {
    spec: NetworkSpec,
    streams: RngStreams,
    state: SimState,
}

impl Simulator {
    pub fn new(spec: &NetworkSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        for (i, q) in spec.q0.iter().enumerate() {
            if q.fract() != 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "q0[{i}] = {q} must be an integer for simulation"
                )));
            }
        }
        let mut sim = Simulator {
            spec: spec.clone(),
            streams: RngStreams::new(seed),
            state: SimState {
                clock: 0.0,
                queues: [VecDeque::new(), VecDeque::new()],
                hol_remaining: [0.0; 2],
                next_arrival: [f64::INFINITY; 2],
                busy: [0.0; 2],
                idle: 0.0,
                external: [0; 2],
                arrivals: [0; 2],
                departures: [0; 2],
                served_work: [0.0; 2],
                input_work: 0.0,
                queue_area: [0.0; 2],
                sojourn_total: [0.0; 2],
            },
        };
        for node in 0..2 {
            for _ in 0..spec.q0[node] as u64 {
                sim.admit(node)?;
            }
        }
        for node in 0..2 {
            if let Some(d) = &sim.spec.nodes[node].interarrival {
                sim.state.next_arrival[node] = d.sample(&mut sim.streams.arrivals[node]);
            }
        }
        Ok(sim)
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn rates(&self) -> RateVector {
        self.state.rates(self.spec.k)
    }

    fn admit(&mut self, node: usize) -> Result<()> {
        let itinerary = sample_itinerary(&self.spec, node, &mut self.streams)?;
        self.state.input_work += itinerary.total();
        let customer = Customer::new(itinerary, self.state.clock);
        self.enqueue(node, customer);
        Ok(())
    }

    fn enqueue(&mut self, node: usize, customer: Customer) {
        let st = &mut self.state;
        if st.queues[node].is_empty() {
            st.hol_remaining[node] = customer.immediate();
        }
        st.queues[node].push_back(customer);
    }

    /// Time and kind of the next event. Ties resolve as: arrival at node 1,
    /// arrival at node 2, completion at node 1, completion at node 2.
    pub fn next_event(&self) -> (f64, EventKind) {
        let st = &self.state;
        let rates = self.rates();
        let mut best = (f64::INFINITY, EventKind::End);
        for node in 0..2 {
            if st.next_arrival[node] < best.0 {
                best = (st.next_arrival[node], EventKind::Arrival(node));
            }
        }
        for node in 0..2 {
            if !st.queues[node].is_empty() && rates[node] > 0.0 {
                let t = st.clock + st.hol_remaining[node].max(0.0) / rates[node];
                if t < best.0 {
                    best = (t, EventKind::Completion(node));
                }
            }
        }
        best
    }

    /// Moves the clock to `t` with no event in between.
    fn flow_to(&mut self, t: f64) {
        let rates = self.rates();
        let st = &mut self.state;
        let dt = t - st.clock;
        if dt <= 0.0 {
            return;
        }
        if st.queues[0].is_empty() && st.queues[1].is_empty() {
            st.idle += dt;
        } else {
            for node in 0..2 {
                if rates[node] > 0.0 {
                    let effort = rates[node] * dt;
                    st.busy[node] += effort;
                    st.hol_remaining[node] -= effort;
                }
            }
        }
        for node in 0..2 {
            st.queue_area[node] += st.queues[node].len() as f64 * dt;
        }
        st.clock = t;
    }

    fn process(&mut self, kind: EventKind) -> Result<()> {
        match kind {
            EventKind::Arrival(node) => {
                self.state.external[node] += 1;
                self.state.arrivals[node] += 1;
                self.admit(node)?;
                let gap = self.spec.nodes[node]
                    .interarrival
                    .as_ref()
                    .map_or(f64::INFINITY, |d| d.sample(&mut self.streams.arrivals[node]));
                self.state.next_arrival[node] += gap;
            }
            EventKind::Completion(node) => {
                let now = self.state.clock;
                let st = &mut self.state;
                let mut customer = st.queues[node].pop_front().expect("busy node has a customer");
                st.hol_remaining[node] = 0.0;
                st.served_work[node] += customer.immediate();
                st.departures[node] += 1;
                st.sojourn_total[node] += now - customer.entered_at;
                if let Some(next) = st.queues[node].front() {
                    st.hol_remaining[node] = next.immediate();
                }
                if customer.pos + 1 < customer.steps.len() {
                    customer.pos += 1;
                    customer.refresh_future();
                    customer.entered_at = now;
                    let dest = customer.node();
                    self.state.arrivals[dest] += 1;
                    self.enqueue(dest, customer);
                }
            }
            EventKind::Start | EventKind::Sample | EventKind::End => {}
        }
        Ok(())
    }

    /// Processes the next event, however far away. Returns `None` when no
    /// event will ever happen.
    pub fn step(&mut self) -> Result<Option<(f64, EventKind)>> {
        let (t, kind) = self.next_event();
        if !t.is_finite() {
            return Ok(None);
        }
        self.flow_to(t);
        self.process(kind)?;
        Ok(Some((t, kind)))
    }

    /// Processes every event with time `<= t`, calling `on_event` after each,
    /// then moves the clock to `t`.
    pub fn advance_to<F>(&mut self, t: f64, mut on_event: F) -> Result<()>
    where
        F: FnMut(EventKind, &SimState),
    {
        loop {
            let (te, kind) = self.next_event();
            if te > t {
                break;
            }
            self.flow_to(te);
            self.process(kind)?;
            on_event(kind, &self.state);
        }
        self.flow_to(t);
        Ok(())
    }
}
