//! Counter-keyed random streams.
//!
//! Every random draw in the crate comes from a stream identified by
//! `(seed, purpose, index)`. The stream is a ChaCha8 generator whose key is
//! derived from the triple by a SplitMix64 mix, so the numbers seen by a PSA
//! row or an outer simulation do not depend on which thread evaluated it or
//! in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    PsaDraw = 1,
    FutureData = 2,
    Bootstrap = 3,
    Metropolis = 4,
    OracleOuter = 5,
    OracleInner = 6,
    MomentMatching = 7,
    MomentMatchingRerun = 8,
    EssPilot = 9,
    Generic = 10,
}

/// Identifies one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub purpose: Purpose,
    pub index: u64,
}

impl StreamKey {
    pub fn new(seed: u64, purpose: Purpose, index: u64) -> Self {
        Self {
            seed,
            purpose,
            index,
        }
    }

    /// Derive a sub-seed, used when a stage needs its own seed family
    /// (e.g. one seed per evaluated sample size).
    pub fn derive_seed(&self) -> u64 {
        let mut state = self.seed ^ 0x6a09_e667_f3bc_c908;
        let a = splitmix64(&mut state);
        let mut state = a ^ (self.purpose as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let b = splitmix64(&mut state);
        let mut state = b ^ self.index.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        splitmix64(&mut state)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut state = self.derive_seed();
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}

/// Shorthand for `StreamKey::new(seed, purpose, index).rng()`.
pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    StreamKey::new(seed, purpose, index).rng()
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
