//! Deterministic seed splitting.
//!
//! Every random quantity in the crate is drawn from a [`StreamSeed`] derived
//! from one master seed by a path of integer indices (for example
//! `master.child(grid_index).child(replicate)`). Streams depend only on the
//! path, never on execution order, so parallel runs reproduce sequential ones
//! bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Generator used for every stream.
pub type StreamRng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamSeed(u64);

impl StreamSeed {
    pub fn new(seed: u64) -> Self {
        StreamSeed(seed)
    }

    pub fn value(self) -> u64 {
        self.0
    }

    /// Independent sub-stream number `index`.
    pub fn child(self, index: u64) -> Self {
        let salt = splitmix64(index.wrapping_add(0xA076_1D64_78BD_642F));
        StreamSeed(splitmix64(self.0 ^ salt))
    }

    pub fn rng(self) -> StreamRng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
