//! Counter-based random streams.
//!
//! Every stream is a ChaCha8 keystream keyed by `(master_seed, game_index)`
//! and selected by a 64-bit stream id (the agent, or a block number). Two
//! streams with different keys or ids share no state, so games can be
//! generated in any order, on any thread, and still come out bit-identical.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const TWO_POW_NEG_52: f64 = 1.0 / (1u64 << 52) as f64;

#[derive(Debug, Clone)]
pub struct RandomStream {
    inner: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(master_seed: u64, game_index: u64, stream_id: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&game_index.to_le_bytes());
        // Tag the remaining key words so a zero seed does not give an all-zero key.
        key[16..24].copy_from_slice(&0x6570_7367_616d_6573u64.to_le_bytes());
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(stream_id);
        Self { inner }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw on the open interval (0, 1): the midpoint of one of
    /// 2^52 equal cells. Every midpoint is exactly representable, so neither
    /// endpoint is reachable.
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 12) as f64 + 0.5) * TWO_POW_NEG_52
    }

    /// Fill `out` with consecutive open-interval uniforms.
    pub fn fill_open01(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.next_open01();
        }
    }
}
