//! Seed handling.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from a root seed
//! through [`derive_seed`]. A stream is identified by a domain tag and an
//! index, so bootstrap replica `i` always sees the same numbers regardless of
//! how many replicas run or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Domain tags for the derived streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Filter = 1,
    Simulation = 2,
    Bootstrap = 3,
    Experiment = 4,
    Composite = 5,
    MonteCarlo = 6,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of stream `(domain, index)` from `root`.
pub fn derive_seed(root: u64, domain: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(root ^ splitmix64(domain as u64)) ^ splitmix64(index.wrapping_add(0x5851_f42d)))
}

pub fn seeded_rng(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream_rng(root: u64, domain: Stream, index: u64) -> StreamRng {
    seeded_rng(derive_seed(root, domain, index))
}
