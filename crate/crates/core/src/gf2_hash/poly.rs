//! Dense polynomials over GF(2).

use std::fmt;

use rand::Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Polynomial over GF(2), coefficient of `x^i` stored at bit `i` of a
/// little-endian `u64` limb vector. Trailing zero limbs are always trimmed,
/// so the zero polynomial has no limbs.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Gf2Poly {
    limbs: Vec<u64>,
}

impl Gf2Poly {
    pub fn zero() -> Self {
        Gf2Poly { limbs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::monomial(0)
    }

    pub fn monomial(power: usize) -> Self {
        let mut limbs = vec![0u64; power / 64 + 1];
        limbs[power / 64] = 1 << (power % 64);
        Gf2Poly { limbs }
    }

    /// Builds a polynomial from a bit mask, bit `i` being the coefficient of `x^i`.
    pub fn from_mask(mask: u128) -> Self {
        Self::from_limbs(vec![mask as u64, (mask >> 64) as u64])
    }

    /// Coefficients lowest power first.
    pub fn from_coeffs(coeffs: &[bool]) -> Self {
        let mut limbs = vec![0u64; coeffs.len().div_ceil(64)];
        for (i, _) in coeffs.iter().enumerate().filter(|(_, &c)| c) {
            limbs[i / 64] |= 1 << (i % 64);
        }
        Self::from_limbs(limbs)
    }

    fn from_limbs(mut limbs: Vec<u64>) -> Self {
        while limbs.last() == Some(&0) {
            limbs.pop();
        }
        Gf2Poly { limbs }
    }

    pub fn is_zero(&self) -> bool {
        self.limbs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.limbs == [1]
    }

    /// Index of the highest set coefficient; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        let top = *self.limbs.last()?;
        Some((self.limbs.len() - 1) * 64 + 63 - top.leading_zeros() as usize)
    }

    pub fn coeff(&self, power: usize) -> bool {
        self.limbs
            .get(power / 64)
            .is_some_and(|l| (l >> (power % 64)) & 1 == 1)
    }

    /// Coefficients `x^0 ..= x^degree`; empty for zero.
    pub fn coeffs(&self) -> Vec<bool> {
        match self.degree() {
            None => Vec::new(),
            Some(d) => (0..=d).map(|i| self.coeff(i)).collect(),
        }
    }

    pub fn add(&self, other: &Gf2Poly) -> Gf2Poly {
        let mut out = self.clone();
        out.xor_shifted(other, 0);
        out
    }

    pub fn mul(&self, other: &Gf2Poly) -> Gf2Poly {
        let mut out = Gf2Poly::zero();
        if let Some(d) = other.degree() {
            for i in (0..=d).filter(|&i| other.coeff(i)) {
                out.xor_shifted(self, i);
            }
        }
        out
    }

    /// Quotient and remainder of `self / divisor`.
    pub fn div_rem(&self, divisor: &Gf2Poly) -> Result<(Gf2Poly, Gf2Poly)> {
        let dd = divisor
            .degree()
            .ok_or_else(|| Error::invalid("division by the zero polynomial"))?;
        let mut rem = self.clone();
        let mut quot = Gf2Poly::zero();
        while let Some(rd) = rem.degree() {
            if rd < dd {
                break;
            }
            let shift = rd - dd;
            rem.xor_shifted(divisor, shift);
            quot.xor_shifted(&Gf2Poly::one(), shift);
        }
        Ok((quot, rem))
    }

    pub fn rem(&self, modulus: &Gf2Poly) -> Result<Gf2Poly> {
        Ok(self.div_rem(modulus)?.1)
    }

    pub fn gcd(&self, other: &Gf2Poly) -> Gf2Poly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b).expect("b is non-zero");
            a = b;
            b = r;
        }
        a
    }

    /// `self += other * x^shift`
    fn xor_shifted(&mut self, other: &Gf2Poly, shift: usize) {
        if other.is_zero() {
            return;
        }
        let (limb_shift, bit_shift) = (shift / 64, shift % 64);
        let needed = other.limbs.len() + limb_shift + 1;
        if self.limbs.len() < needed {
            self.limbs.resize(needed, 0);
        }
        for (i, &l) in other.limbs.iter().enumerate() {
            self.limbs[i + limb_shift] ^= l << bit_shift;
            if bit_shift != 0 {
                self.limbs[i + limb_shift + 1] ^= l >> (64 - bit_shift);
            }
        }
        while self.limbs.last() == Some(&0) {
            self.limbs.pop();
        }
    }

    /// Irreducibility over GF(2) via the gcd ladder: a degree-`n` polynomial
    /// is irreducible iff `gcd(x^(2^k) - x, p) = 1` for every `1 <= k <= n/2`.
    pub fn is_irreducible(&self) -> Result<bool> {
        let n = match self.degree() {
            None | Some(0) => {
                return Err(Error::invalid(
                    "irreducibility is undefined for zero or constant polynomials",
                ))
            }
            Some(n) => n,
        };
        let x = Gf2Poly::monomial(1);
        let mut frob = x.rem(self)?;
        for _ in 1..=n / 2 {
            frob = frob.mul(&frob).rem(self)?;
            if !frob.add(&x).gcd(self).is_one() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl fmt::Debug for Gf2Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf2Poly({self})")
    }
}

impl fmt::Display for Gf2Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Some(d) = self.degree() else {
            return f.write_str("0");
        };
        let terms: Vec<String> = (0..=d)
            .rev()
            .filter(|&i| self.coeff(i))
            .map(|i| match i {
                0 => "1".to_string(),
                1 => "x".to_string(),
                _ => format!("x^{i}"),
            })
            .collect();
        f.write_str(&terms.join(" + "))
    }
}

pub fn poly_is_irreducible(p: &Gf2Poly) -> Result<bool> {
    p.is_irreducible()
}

/// The n-bit encoding of a monic degree-n polynomial: coefficients of
/// `x^0 .. x^(n-1)`, the leading `x^n` term being implicit.
pub fn encode_poly(p: &Gf2Poly) -> Result<BitString> {
    let n = p
        .degree()
        .filter(|&d| d >= 1)
        .ok_or_else(|| Error::invalid("cannot encode a constant polynomial"))?;
    Ok((0..n).map(|i| p.coeff(i)).collect())
}

/// Inverse of [`encode_poly`]. Returns `None` when the decoded polynomial
/// is reducible, which callers treat as a verification failure.
pub fn decode_poly(r: &BitString) -> Option<Gf2Poly> {
    if r.is_empty() {
        return None;
    }
    let mut coeffs = r.as_slice().to_vec();
    coeffs.push(true);
    let p = Gf2Poly::from_coeffs(&coeffs);
    match p.is_irreducible() {
        Ok(true) => Some(p),
        _ => None,
    }
}

/// Rejection-samples a uniformly random irreducible polynomial of degree `n`
/// and returns it along with its n-bit encoding.
pub fn sample_irreducible<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<(Gf2Poly, BitString)> {
    if n < 2 {
        return Err(Error::invalid(format!("polynomial degree must be >= 2, got {n}")));
    }
    loop {
        let r = BitString::random(n, rng);
        if let Some(p) = decode_poly(&r) {
            return Ok((p, r));
        }
    }
}
