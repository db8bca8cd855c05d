use crate::bits::BitString;
use crate::error::{Error, Result};

use super::poly::Gf2Poly;

/// Feedback taps `c_0 .. c_{n-1}` of `p` (the coefficients below the leading term).
pub(crate) fn taps(p: &Gf2Poly) -> Result<(usize, Vec<bool>)> {
    let n = p
        .degree()
        .filter(|&d| d >= 1)
        .ok_or_else(|| Error::invalid("LFSR connection polynomial must have degree >= 1"))?;
    Ok((n, (0..n).map(|i| p.coeff(i)).collect()))
}

/// First `count` bits of the sequence `s_0, s_1, ...` with `s_0..s_{n-1} = seed`
/// and `s_{j+n} = sum_i c_i s_{j+i}` over GF(2).
pub fn lfsr_stream(p: &Gf2Poly, seed: &BitString, count: usize) -> Result<BitString> {
    let (n, taps) = taps(p)?;
    if seed.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: seed.len(),
        });
    }
    let mut s: Vec<bool> = seed.iter().collect();
    s.reserve(count.saturating_sub(n));
    for j in 0..count.saturating_sub(n) {
        let next = taps
            .iter()
            .zip(&s[j..j + n])
            .fold(false, |acc, (&c, &b)| acc ^ (c & b));
        s.push(next);
    }
    s.truncate(count);
    Ok(BitString::from_bits(s))
}
