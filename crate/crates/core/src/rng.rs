//! Deterministic random streams.
//!
//! Every stream is a ChaCha8 generator seeded from a 64-bit key. Keys are
//! derived from a master seed and a path of counters (grid index, replication
//! index, dataset tag, trial index, ...) by chaining the SplitMix64 finalizer,
//! so a stream depends only on its path and never on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the key of the stream at `path` below `master`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

pub fn stream_from_seed(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream(master: u64, path: &[u64]) -> Stream {
    stream_from_seed(derive_seed(master, path))
}
