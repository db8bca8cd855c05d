use crate::bits::BitString;
use crate::error::{Error, Result};

use super::lfsr::taps;
use super::poly::Gf2Poly;

/// LFSR-based Toeplitz hash `h_{p,s}`.
///
/// The tag is the XOR, over every message position `j` with `M_j = 1`, of the
/// n-bit keystream window `(s_j, ..., s_{j+n-1})`. Position 0 contributes too.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LfsrToeplitzHasher {
    poly: Gf2Poly,
    seed: BitString,
    n: usize,
    tap_words: Vec<u64>,
}

impl LfsrToeplitzHasher {
    /// Fails unless `poly` is irreducible and `seed` has `deg(poly)` bits.
    pub fn new(poly: Gf2Poly, seed: BitString) -> Result<Self> {
        let (n, taps) = taps(&poly)?;
        if !poly.is_irreducible()? {
            return Err(Error::invalid(format!("hash polynomial {poly} is reducible")));
        }
        if seed.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: seed.len(),
            });
        }
        Ok(LfsrToeplitzHasher {
            tap_words: pack(taps.iter().copied(), n),
            poly,
            seed,
            n,
        })
    }

    pub fn poly(&self) -> &Gf2Poly {
        &self.poly
    }

    pub fn seed(&self) -> &BitString {
        &self.seed
    }

    pub fn output_len(&self) -> usize {
        self.n
    }

    pub fn hash(&self, msg: &BitString) -> Result<BitString> {
        if msg.is_empty() {
            return Err(Error::invalid("cannot hash an empty message"));
        }
        let words = self.n.div_ceil(64);
        let top = (self.n - 1) % 64;
        let mut window = pack(self.seed.iter(), self.n);
        let mut acc = vec![0u64; words];
        for (j, bit) in msg.iter().enumerate() {
            if bit {
                acc.iter_mut().zip(&window).for_each(|(a, w)| *a ^= w);
            }
            if j + 1 == msg.len() {
                break;
            }
            let feedback = window
                .iter()
                .zip(&self.tap_words)
                .fold(0u32, |par, (w, t)| par ^ (w & t).count_ones())
                & 1;
            // Slide the window by one: bit i <- bit i+1, new bit at n-1.
            for w in 0..words {
                let carry = window.get(w + 1).map_or(0, |next| next << 63);
                window[w] = (window[w] >> 1) | carry;
            }
            window[words - 1] |= (feedback as u64) << top;
        }
        Ok((0..self.n).map(|i| (acc[i / 64] >> (i % 64)) & 1 == 1).collect())
    }
}

fn pack(bits: impl Iterator<Item = bool>, n: usize) -> Vec<u64> {
    let mut words = vec![0u64; n.div_ceil(64)];
    for (i, _) in bits.enumerate().filter(|(_, b)| *b) {
        words[i / 64] |= 1 << (i % 64);
    }
    words
}

pub fn hash(h: &LfsrToeplitzHasher, msg: &BitString) -> Result<BitString> {
    h.hash(msg)
}
