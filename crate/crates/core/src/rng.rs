//! Counter-based random streams.
//!
//! Every draw is addressed by `(run seed, stream key, position)` rather than by
//! how many draws happened before it, so evaluation order (sequential or
//! concurrent) can never change the numbers a run sees. ChaCha8 is used as the
//! keyed block function: the run seed is the key, the stream key selects the
//! ChaCha stream, and the position is the word offset.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream domain for blackbox noise.
pub const NOISE_DOMAIN: u64 = 0x6e6f_6973_6500_0001;
/// Stream domain for poll direction generation.
pub const DIRECTION_DOMAIN: u64 = 0x6469_7265_6300_0002;

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of words into a single stream key.
pub fn stream_key(parts: &[u64]) -> u64 {
    parts.iter().fold(0xA076_1D64_78BD_642F, |acc, p| mix(acc ^ mix(*p)))
}

fn key_bytes(seed: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    let mut s = seed;
    for chunk in key.chunks_exact_mut(8) {
        s = mix(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    key
}

/// A generator positioned at the start of stream `stream` under `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(key_bytes(seed));
    rng.set_stream(stream);
    rng
}

/// The `index`-th uniform variate in `[0, 1)` of stream `stream`.
pub fn uniform_at(seed: u64, stream_id: u64, index: u64) -> f64 {
    let mut rng = stream(seed, stream_id);
    rng.set_word_pos(u128::from(index) * 2);
    unit_f64(rng.next_u64())
}

pub(crate) fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
