//! Deterministic generator derivation.
//!
//! All randomness in the crate flows from a single root seed. Independent
//! per-task generators are derived by a counter-based split: the root seed is
//! mixed with a stream index and a purpose tag through SplitMix64, and the
//! mixed words seed a ChaCha12 stream. Two tasks with distinct (stream, salt)
//! pairs get statistically independent generators, and the derivation is a
//! pure function, so results never depend on thread scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Purpose tags keep generators for different roles disjoint even when they
/// share a (seed, replica) pair.
pub mod salt {
    pub const MATRIX_ENTRIES: u64 = 0x4d41_5452_4958_0001;
    pub const LANCZOS_START: u64 = 0x4c41_4e43_5a4f_0002;
    pub const TAIL_SUM: u64 = 0x5441_494c_5355_0003;
    pub const TRACE_MOMENT: u64 = 0x5452_4143_4500_0004;
    pub const GENERIC: u64 = 0x4745_4e45_5249_0005;
}

#[inline]
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent generator from `(root_seed, stream, salt)`.
pub fn derive_rng(root_seed: u64, stream: u64, salt: u64) -> ChaCha12Rng {
    let mut state = root_seed
        ^ stream.wrapping_mul(0xa076_1d64_78bd_642f)
        ^ salt.wrapping_mul(0xe703_7ed1_a0b4_28db);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(seed)
}
