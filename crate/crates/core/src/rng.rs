//! Reproducible random streams for path-parallel Monte Carlo.
//!
//! Every path draws from its own ChaCha8 generators keyed by
//! `(master seed, purpose, path index)`:
//!
//! ```text
//! key  = splitmix64(master ^ splitmix64(purpose))
//! rng  = ChaCha8(seed_from_u64(key)), stream = path index
//! ```
//!
//! Streams never depend on which thread runs the path or in which order
//! paths are scheduled, so results are identical for any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Purpose tags separating the independent draws a path makes.
pub mod purpose {
    pub const BROWNIAN: u64 = 1;
    pub const JUMPS: u64 = 2;
    pub const SMALL_JUMPS: u64 = 3;
    pub const SAMPLING: u64 = 4;
    pub const BRIDGE: u64 = 5;
}

pub fn stream(master: u64, purpose: u64, index: u64) -> StreamRng {
    let key = splitmix64(master ^ splitmix64(purpose));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}

/// The generators one simulated path uses.
pub struct PathRng {
    pub brownian: StreamRng,
    pub jumps: StreamRng,
    pub small_jumps: StreamRng,
}

impl PathRng {
    pub fn new(master: u64, path_index: u64) -> Self {
        Self {
            brownian: stream(master, purpose::BROWNIAN, path_index),
            jumps: stream(master, purpose::JUMPS, path_index),
            small_jumps: stream(master, purpose::SMALL_JUMPS, path_index),
        }
    }
}
