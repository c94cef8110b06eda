//! Seed derivation and named random streams.
//!
//! Every stochastic primitive of a simulation run owns its own ChaCha8
//! stream, all derived from one master seed. Replication seeds are
//! derived with [`split_seed`], a SplitMix64 finalizer over the master seed
//! and the replication coordinates, so that the seed of replication
//! `(n, rep)` does not depend on scheduling or on which other replications
//! were run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the child identified by `path` under `master`.
pub fn split_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Identifies one named stream of a simulation run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Arrivals(usize),
    Routing,
    Service(usize),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Arrivals(i) => 1 + i as u64,
            Stream::Routing => 3,
            Stream::Service(i) => 4 + i as u64,
        }
    }
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}

/// The five streams used by the network simulator.
#[derive(Clone, Debug)]
pub struct RngStreams {
    pub arrivals: [ChaCha8Rng; 2],
    pub routing: ChaCha8Rng,
    pub service: [ChaCha8Rng; 2],
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        RngStreams {
            arrivals: [
                stream_rng(seed, Stream::Arrivals(0)),
                stream_rng(seed, Stream::Arrivals(1)),
            ],
            routing: stream_rng(seed, Stream::Routing),
            service: [
                stream_rng(seed, Stream::Service(0)),
                stream_rng(seed, Stream::Service(1)),
            ],
        }
    }
}
