use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::NetworkSpec;
use crate::rng::RngStreams;

/// Hard cap on itinerary length. Unreachable for an open network; it only
/// guards against a misconfigured routing matrix.
pub const MAX_ITINERARY_STEPS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Step {
    pub node: usize,
    pub requirement: f64,
}

/// The full, pre-sampled route of one customer through the network.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Itinerary {
    pub origin: usize,
    pub steps: Vec<Step>,
}

impl Itinerary {
    pub fn immediate(&self) -> f64 {
        self.steps[0].requirement
    }

    /// Requirement of every step after the first (`s'`).
    pub fn future(&self) -> f64 {
        self.steps[1..].iter().map(|s| s.requirement).sum()
    }

    pub fn total(&self) -> f64 {
        self.steps.iter().map(|s| s.requirement).sum()
    }

    pub fn visits(&self, node: usize) -> usize {
        self.steps.iter().filter(|s| s.node == node).count()
    }
}

/// Draws a route from `origin` through the absorbing chain given by the
/// routing matrix, with one service draw per visit.
pub fn sample_itinerary(
    spec: &NetworkSpec,
    origin: usize,
    streams: &mut RngStreams,
) -> Result<Itinerary> {
    let mut steps = Vec::with_capacity(2);
    let mut node = origin;
    loop {
        if steps.len() >= MAX_ITINERARY_STEPS {
            return Err(Error::RunawayItinerary(MAX_ITINERARY_STEPS));
        }
        let requirement = spec.nodes[node].service.sample(&mut streams.service[node]);
        steps.push(Step { node, requirement });
        let row = spec.routing[node];
        let u: f64 = streams.routing.random();
        node = if u < row[0] {
            0
        } else if u < row[0] + row[1] {
            1
        } else {
            break;
        };
    }
    Ok(Itinerary { origin, steps })
}
