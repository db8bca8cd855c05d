//! Fixed-length bit strings.
//!
//! Index 0 is the first transmitted bit. Byte serialization packs bits
//! most-significant-bit first; a trailing partial byte is zero padded.

use std::fmt;
use std::ops::Index;

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString {
            bits: vec![false; len],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitString { bits }
    }

    /// Parses a string of `'0'`/`'1'` characters.
    pub fn parse_binary(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::invalid(format!("not a binary digit: {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::from_bits)
    }

    pub fn from_bytes(bytes: &[u8]) -> Self {
        let bits = bytes
            .iter()
            .flat_map(|&b| (0..8).rev().map(move |i| (b >> i) & 1 == 1))
            .collect();
        BitString { bits }
    }

    /// Decodes `len` bits from hex (MSB first per byte).
    pub fn from_hex(hex: &str, len: usize) -> Result<Self> {
        let hex = hex.trim();
        if !hex.len().is_multiple_of(2) {
            return Err(Error::invalid("hex string has odd length"));
        }
        let bytes = (0..hex.len())
            .step_by(2)
            .map(|i| {
                u8::from_str_radix(&hex[i..i + 2], 16)
                    .map_err(|e| Error::invalid(format!("bad hex {:?}: {e}", &hex[i..i + 2])))
            })
            .collect::<Result<Vec<u8>>>()?;
        if bytes.len() * 8 < len || bytes.len() != len.div_ceil(8) {
            return Err(Error::invalid(format!(
                "{} hex bytes cannot hold exactly {len} bits",
                bytes.len()
            )));
        }
        let mut out = Self::from_bytes(&bytes);
        if out.bits[len..].iter().any(|&b| b) {
            return Err(Error::invalid("non-zero padding bits in hex string"));
        }
        out.bits.truncate(len);
        Ok(out)
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        BitString {
            bits: (0..len).map(|_| rng.random::<bool>()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.bits.get(i).copied()
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = value;
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i] = !self.bits[i];
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_zero(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(BitString {
            bits: self.iter().zip(other.iter()).map(|(a, b)| a ^ b).collect(),
        })
    }

    /// In-place XOR; panics on length mismatch.
    pub fn xor_assign(&mut self, other: &BitString) {
        assert_eq!(self.len(), other.len(), "xor of unequal-length bit strings");
        for (a, b) in self.bits.iter_mut().zip(other.bits.iter()) {
            *a ^= *b;
        }
    }

    pub fn concat(&self, tail: &BitString) -> BitString {
        let mut bits = Vec::with_capacity(self.len() + tail.len());
        bits.extend_from_slice(&self.bits);
        bits.extend_from_slice(&tail.bits);
        BitString { bits }
    }

    pub fn split_at(&self, mid: usize) -> (BitString, BitString) {
        let (a, b) = self.bits.split_at(mid);
        (BitString::from_bits(a.to_vec()), BitString::from_bits(b.to_vec()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.bits
            .chunks(8)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, &b)| acc | ((b as u8) << (7 - i)))
            })
            .collect()
    }

    pub fn to_hex(&self) -> String {
        self.to_bytes().iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl Index<usize> for BitString {
    type Output = bool;

    fn index(&self, i: usize) -> &bool {
        &self.bits[i]
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        BitString {
            bits: iter.into_iter().collect(),
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString[{}]({self})", self.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn msb_first_bytes() {
        let b = BitString::from_bytes(&[0b1000_0001, 0x0f]);
        assert_eq!(b.to_string(), "1000000100001111");
        assert_eq!(b.to_hex(), "810f");
    }

    #[test]
    fn partial_byte_is_zero_padded() {
        let b = BitString::parse_binary("101").unwrap();
        assert_eq!(b.to_bytes(), vec![0b1010_0000]);
        assert_eq!(BitString::from_hex("a0", 3).unwrap(), b);
        assert!(BitString::from_hex("b0", 3).is_err());
    }

    #[test]
    fn xor_requires_equal_length() {
        let a = BitString::zeros(4);
        let b = BitString::zeros(5);
        assert_eq!(
            a.xor(&b),
            Err(Error::LengthMismatch {
                expected: 4,
                actual: 5
            })
        );
    }

    proptest! {
        #[test]
        fn hex_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..200)) {
            let b = BitString::from_bits(bits);
            prop_assert_eq!(BitString::from_hex(&b.to_hex(), b.len()).unwrap(), b);
        }

        #[test]
        fn split_inverts_concat(
            a in proptest::collection::vec(any::<bool>(), 0..64),
            b in proptest::collection::vec(any::<bool>(), 0..64),
        ) {
            let a = BitString::from_bits(a);
            let b = BitString::from_bits(b);
            let (x, y) = a.concat(&b).split_at(a.len());
            prop_assert_eq!(x, a);
            prop_assert_eq!(y, b);
        }
    }
}
