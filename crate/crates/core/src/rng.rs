//! Counter-based random streams.
//!
//! Every random draw in a simulation is keyed by `(seed, stream, a, b, c)`, so
//! the value a case receives for, say, its second execution of an activity does
//! not depend on the order in which the engine happens to process events.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Arrivals = 1,
    Durations = 2,
    Branching = 3,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, stream: Stream, a: u64, b: u64, c: u64) -> u64 {
    let mut h = splitmix64(seed ^ 0x5EED_0000_0000_0000);
    for part in [stream as u64, a, b, c] {
        h = splitmix64(h ^ part);
    }
    h
}

pub fn stream_rng(seed: u64, stream: Stream, a: u64, b: u64, c: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, a, b, c))
}
