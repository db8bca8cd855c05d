//! Reference Toeplitz hash built from an explicit n x m matrix.
//!
//! Used only to cross-check [`LfsrToeplitzHasher`](super::LfsrToeplitzHasher);
//! it deliberately shares no code with the streaming implementation.

use crate::bits::BitString;
use crate::error::{Error, Result};

use super::lfsr::lfsr_stream;
use super::poly::Gf2Poly;

/// Row `r` of the matrix is `(s_r, s_{r+1}, ..., s_{r+m-1})`, so the product
/// with `M` is the XOR of the keystream windows selected by `M`.
pub fn toeplitz_matrix(p: &Gf2Poly, seed: &BitString, m: usize) -> Result<Vec<Vec<bool>>> {
    let n = seed.len();
    let stream = lfsr_stream(p, seed, m + n - 1)?;
    Ok((0..n)
        .map(|r| (0..m).map(|j| stream[r + j]).collect())
        .collect())
}

pub fn toeplitz_oracle(p: &Gf2Poly, seed: &BitString, msg: &BitString) -> Result<BitString> {
    if msg.is_empty() {
        return Err(Error::invalid("cannot hash an empty message"));
    }
    let matrix = toeplitz_matrix(p, seed, msg.len())?;
    Ok(matrix
        .iter()
        .map(|row| {
            row.iter()
                .zip(msg.iter())
                .fold(false, |acc, (&h, m)| acc ^ (h & m))
        })
        .collect())
}
