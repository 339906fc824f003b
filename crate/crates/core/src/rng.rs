//! Deterministic random substreams.
//!
//! Every randomized routine in the crate draws from a substream derived from
//! the single experiment seed and a static label, so results never depend on
//! call order across stages.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a named substream from the master seed.
///
/// The label is folded into a splitmix64 chain, so distinct labels give
/// statistically independent streams and the mapping is stable across
/// platforms and runs.
pub fn substream(seed: u64, label: &str) -> ChaCha12Rng {
    let mut state = seed ^ 0x6A09_E667_F3BC_C908;
    for b in label.as_bytes() {
        state ^= u64::from(*b);
        splitmix64(&mut state);
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}
