//! Fixed-length bit strings.

use std::fmt;

use crate::error::Error;

/// An ordered sequence of bits packed LSB-first into 64-bit words.
///
/// Bits past `len` in the last word are always zero, so word-wise equality
/// and hashing agree with bit-wise equality.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ShareString {
    words: Vec<u64>,
    len: usize,
}

impl ShareString {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_words(mut words: Vec<u64>, len: usize) -> Self {
        words.resize(len.div_ceil(64), 0);
        let mut s = Self { words, len };
        s.clear_tail();
        s
    }

    /// Builds a string from the low `len` bits of `value` (`len <= 64`).
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64);
        Self::from_words(vec![value], len)
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut words = Vec::new();
        let mut len = 0;
        for b in bits {
            if len % 64 == 0 {
                words.push(0);
            }
            if b {
                words[len / 64] |= 1 << (len % 64);
            }
            len += 1;
        }
        Self { words, len }
    }

    fn clear_tail(&mut self) {
        let r = self.len % 64;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn bit(&self, i: usize) -> bool {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set_bit(&mut self, i: usize, value: bool) {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.bit(i))
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// XOR of two equal-length strings.
    pub fn xor(&self, other: &Self) -> Result<Self, Error> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a ^ b)
            .collect();
        Ok(Self {
            words,
            len: self.len,
        })
    }

    /// In-place XOR. Panics on length mismatch; callers in the protocol engine
    /// only combine strings of the network's share length.
    pub fn xor_assign(&mut self, other: &Self) {
        assert_eq!(self.len, other.len, "xor of strings with different lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Bits `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> Self {
        assert!(start + len <= self.len, "slice out of range");
        Self::from_bits((start..start + len).map(|i| self.bit(i)))
    }

    pub fn concat(parts: &[&Self]) -> Self {
        Self::from_bits(parts.iter().flat_map(|p| p.bits()))
    }

    /// Lower-case hex of the bytes of the string; byte `b` holds bits
    /// `8b..8b+8` with bit `8b` as its least-significant bit.
    pub fn to_hex(&self) -> String {
        let nbytes = self.len.div_ceil(8);
        let mut out = String::with_capacity(nbytes * 2);
        for b in 0..nbytes {
            let byte = (self.words[b / 8] >> ((b % 8) * 8)) as u8;
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }

    pub fn from_hex(hex: &str, len: usize) -> Result<Self, Error> {
        if hex.len() != len.div_ceil(8) * 2 {
            return Err(Error::Parse(format!(
                "hex string of {} chars cannot hold {len} bits",
                hex.len()
            )));
        }
        let mut words = vec![0u64; len.div_ceil(64)];
        for b in 0..hex.len() / 2 {
            let byte = u8::from_str_radix(&hex[2 * b..2 * b + 2], 16)
                .map_err(|e| Error::Parse(format!("bad hex {hex:?}: {e}")))?;
            words[b / 8] |= (byte as u64) << ((b % 8) * 8);
        }
        let s = Self::from_words(words.clone(), len);
        if s.words != words {
            return Err(Error::Parse(format!(
                "hex {hex:?} sets bits beyond length {len}"
            )));
        }
        Ok(s)
    }
}

impl fmt::Debug for ShareString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ShareString({}b:{})", self.len, self.to_hex())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn xor_rejects_mismatched_lengths() {
        let a = ShareString::zeros(8);
        let b = ShareString::zeros(9);
        assert!(matches!(
            a.xor(&b),
            Err(Error::LengthMismatch { left: 8, right: 9 })
        ));
    }

    #[test]
    fn tail_bits_are_masked() {
        let s = ShareString::from_u64(u64::MAX, 3);
        assert_eq!(s.words(), &[0b111]);
        assert_eq!(s.count_ones(), 3);
    }

    #[test]
    fn hex_layout() {
        let s = ShareString::from_u64(0xabcd, 16);
        assert_eq!(s.to_hex(), "cdab");
        let s = ShareString::from_u64(0b1_0000_0001, 9);
        assert_eq!(s.to_hex(), "0101");
        assert!(ShareString::from_hex("0103", 9).is_err());
    }

    proptest! {
        #[test]
        fn slices_concat_back(words in proptest::collection::vec(any::<u64>(), 1..4), cut in 0usize..1000) {
            let len = words.len() * 64 - 5;
            let s = ShareString::from_words(words, len);
            let cut = cut % (len + 1);
            let a = s.slice(0, cut);
            let b = s.slice(cut, len - cut);
            prop_assert_eq!(ShareString::concat(&[&a, &b]), s.clone());
            prop_assert_eq!(ShareString::from_hex(&s.to_hex(), len).unwrap(), s);
        }
    }
}
