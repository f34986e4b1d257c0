//! Counter-based random streams.
//!
//! Every stream is a ChaCha8 generator keyed by four 64-bit words:
//! `(master_seed, trajectory, purpose, index)`, little-endian. Distinct keys
//! give independent streams, so results do not depend on which worker runs
//! which item.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Key word for the trajectory-level stream (site selection and outcomes).
pub const PURPOSE_TRAJECTORY: u64 = 0;
/// Key word for per-layer particle-filter streams.
pub const PURPOSE_PARTICLES: u64 = 1;
/// Key word for resampling streams.
pub const PURPOSE_RESAMPLE: u64 = 2;
/// Key word for bootstrap resampling in the harness.
pub const PURPOSE_BOOTSTRAP: u64 = 3;

pub fn stream(master: u64, trajectory: u64, purpose: u64, index: u64) -> SimRng {
    let mut key = [0u8; 32];
    for (i, w) in [master, trajectory, purpose, index].into_iter().enumerate() {
        key[8 * i..8 * (i + 1)].copy_from_slice(&w.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

pub fn trajectory_stream(master: u64, trajectory: u64) -> SimRng {
    stream(master, trajectory, PURPOSE_TRAJECTORY, 0)
}
