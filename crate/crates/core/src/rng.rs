//! Seeded, bit-exact pseudo-random stream.
//!
//! Every random quantity in the simulator (shares, re-randomization strings,
//! compromise patterns, nonces) is drawn from this generator so that runs
//! reproduce exactly from a `u64` seed on any platform. Not cryptographic.

use crate::bits::ShareString;

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 finalizer.
#[inline]
pub fn mix64(mut u: u64) -> u64 {
    u = (u ^ (u >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    u = (u ^ (u >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    u ^ (u >> 31)
}

/// Seed for the `index`-th independent trial of an experiment seeded with `seed`.
#[inline]
pub fn trial_seed(seed: u64, index: u64) -> u64 {
    mix64(seed.wrapping_add(index))
}

/// SplitMix64 stream: `s += GOLDEN_GAMMA; yield mix64(s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision, one word per call.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Unbiased uniform integer in `[0, bound)`, by rejection on the top zone.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "below(0)");
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let w = self.next_u64();
            if w < zone {
                return w % bound;
            }
        }
    }

    /// Draws `len` bits. Each string starts on a fresh word; bits are taken
    /// LSB first and the unused tail of the last word is discarded.
    pub fn next_string(&mut self, len: usize) -> ShareString {
        let words = (0..len.div_ceil(64)).map(|_| self.next_u64()).collect();
        ShareString::from_words(words, len)
    }
}

/// A source of fresh random strings for protocol runs.
///
/// Implemented by [`SplitMix64`] for seeded runs and by [`ScriptedSource`] when
/// tests enumerate every possible assignment of the protocol's randomness.
pub trait StringSource {
    fn next_string(&mut self, len: usize) -> ShareString;
}

impl StringSource for SplitMix64 {
    fn next_string(&mut self, len: usize) -> ShareString {
        SplitMix64::next_string(self, len)
    }
}

/// Replays a fixed list of strings in order.
#[derive(Debug, Clone)]
pub struct ScriptedSource {
    strings: std::vec::IntoIter<ShareString>,
}

impl ScriptedSource {
    pub fn new(strings: Vec<ShareString>) -> Self {
        Self {
            strings: strings.into_iter(),
        }
    }
}

impl StringSource for ScriptedSource {
    fn next_string(&mut self, len: usize) -> ShareString {
        let s = self.strings.next().expect("scripted source exhausted");
        assert_eq!(s.len(), len, "scripted string has the wrong length");
        s
    }
}
