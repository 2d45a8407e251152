//! Deterministic random streams.
//!
//! Replication `r` of a run seeded with `s` owns three independent ChaCha8
//! streams keyed by `(s, r)`: color draws, reinforcement draws and policy
//! auxiliaries. Processes that are coupled share the first two.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const COLOR: u64 = 0;
const REINFORCEMENT: u64 = 1;
const AUXILIARY: u64 = 2;

/// SplitMix64 finaliser.
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// 256-bit ChaCha key for `(seed, replication)`.
pub fn replication_key(seed: u64, replication: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    let mut state = mix(seed) ^ mix(replication.rotate_left(17) ^ 0x5851_f42d_4c95_7f2d);
    for chunk in key.chunks_exact_mut(8) {
        state = mix(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    key
}

fn stream(seed: u64, replication: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(replication_key(seed, replication));
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone)]
pub struct ReplicationStreams {
    pub color: ChaCha8Rng,
    pub reinforcement: ChaCha8Rng,
    pub auxiliary: ChaCha8Rng,
}

impl ReplicationStreams {
    pub fn new(seed: u64, replication: u64) -> Self {
        Self {
            color: stream(seed, replication, COLOR),
            reinforcement: stream(seed, replication, REINFORCEMENT),
            auxiliary: stream(seed, replication, AUXILIARY),
        }
    }
}
