//! Counter-based seed derivation so every random draw is a pure function
//! of (master seed, counter indices) and parallel runs stay reproducible.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// SplitMix64 step; the standard mixer for expanding small seeds.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Derive an independent generator from a master seed and a stream index
/// (round number, trajectory index, ...).
pub fn derive_rng(master_seed: u64, stream: u64) -> ChaCha12Rng {
    let mut state = master_seed ^ stream.wrapping_mul(0xA24BAED4963EE407);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(seed)
}
