//! Fixtures shared by the benchmarks.

use mbpre::carpet::build_carpet_model;
use mbpre::ModelSpec;

/// The carpet projection model just above the critical retention probability.
pub fn supercritical_carpet() -> ModelSpec {
    build_carpet_model(0.4).expect("valid p").model
}

/// A fixed pseudo-random word over `letters` letters.
pub fn fixed_word(len: usize, letters: usize) -> Vec<usize> {
    let mut x: u64 = 0x9e37_79b9_7f4a_7c15;
    (0..len)
        .map(|_| {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x % letters as u64) as usize
        })
        .collect()
}
