//! Counter-based random streams.
//!
//! Every random quantity is drawn from a ChaCha stream selected by
//! `(seed, index, tag)`, so results never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type SimRng = ChaCha12Rng;

/// Stream tags. Scenario streams use `SCENARIO_BASE + scenario id`.
pub mod tag {
    pub const NETWORK: u64 = 1;
    pub const AP_CHANNEL: u64 = 2;
    pub const SCENARIO_BASE: u64 = 16;
}

pub fn substream(seed: u64, index: u64, tag: u64) -> SimRng {
    assert!(index < 1 << 56, "stream index out of range");
    assert!(tag < 256, "stream tag out of range");
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream((index << 8) | tag);
    rng
}
