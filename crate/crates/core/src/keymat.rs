//! Key material from the (simulated) distribution stage, the XOR key algebra
//! shared by the signer and the arbitrator, and analytic key sizing.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};

/// One link's secure key pair: a 2n-bit pad key `x` and an n-bit hash seed key `y`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct KeyBundle {
    x: BitString,
    y: BitString,
}

impl KeyBundle {
    pub fn new(x: BitString, y: BitString) -> Result<Self> {
        if x.len() != 2 * y.len() {
            return Err(Error::LengthMismatch {
                expected: 2 * y.len(),
                actual: x.len(),
            });
        }
        Ok(KeyBundle { x, y })
    }

    /// Uniformly random bundle, modelling a perfectly executed QKD link.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        KeyBundle {
            x: BitString::random(2 * n, rng),
            y: BitString::random(n, rng),
        }
    }

    pub fn x(&self) -> &BitString {
        &self.x
    }

    pub fn y(&self) -> &BitString {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Key bits consumed on the link: `3n`.
    pub fn bit_len(&self) -> usize {
        self.x.len() + self.y.len()
    }

    pub fn to_bits(&self) -> BitString {
        self.x.concat(&self.y)
    }
}

/// Combined keys `(X_s, Y_s)` on the signer side, `(X'_a, Y'_a)` on the arbitrator side.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SessionKeys {
    pub xs: BitString,
    pub ys: BitString,
}

impl SessionKeys {
    pub fn n(&self) -> usize {
        self.ys.len()
    }

    pub fn is_consistent(&self) -> bool {
        self.xs.len() == 2 * self.ys.len()
    }

    pub fn as_bundle(&self) -> Result<KeyBundle> {
        KeyBundle::new(self.xs.clone(), self.ys.clone())
    }
}

impl From<KeyBundle> for SessionKeys {
    fn from(b: KeyBundle) -> Self {
        SessionKeys { xs: b.x, ys: b.y }
    }
}

/// Message length, forgery target and receiver count, with the derived digest
/// half-length `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecurityParams {
    pub m_bits: u64,
    pub eps_f: f64,
    pub k: usize,
    pub n: u32,
}

impl SecurityParams {
    pub fn new(m_bits: u64, eps_f: f64, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("at least one receiver is required"));
        }
        Ok(SecurityParams {
            m_bits,
            eps_f,
            k,
            n: required_n(m_bits, eps_f)?,
        })
    }

    /// Fixed `n`, bypassing the epsilon sizing (small-n experiments).
    pub fn with_n(m_bits: u64, k: usize, n: u32) -> Result<Self> {
        if k == 0 || n < 2 || m_bits == 0 {
            return Err(Error::invalid(format!(
                "need k >= 1, n >= 2 and m >= 1 (got k={k}, n={n}, m={m_bits})"
            )));
        }
        Ok(SecurityParams {
            m_bits,
            eps_f: crate::gf2_hash::collision_bound(m_bits, n),
            k,
            n,
        })
    }

    pub fn per_link_bits(&self) -> u64 {
        3 * self.n as u64
    }

    pub fn total_bits(&self) -> u64 {
        self.per_link_bits() * (self.k as u64 + 1)
    }
}

pub fn distribute_keys<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<(Vec<KeyBundle>, KeyBundle)> {
    if n < 2 || k == 0 {
        return Err(Error::invalid(format!("need n >= 2 and k >= 1 (got n={n}, k={k})")));
    }
    let receivers = (0..k).map(|_| KeyBundle::random(n, rng)).collect();
    Ok((receivers, KeyBundle::random(n, rng)))
}

/// XOR of every receiver bundle with the arbitrator bundle.
pub fn combine<'a, I>(bundles: I, arb: &KeyBundle) -> Result<SessionKeys>
where
    I: IntoIterator<Item = &'a KeyBundle>,
{
    let mut out = SessionKeys::from(arb.clone());
    for b in bundles {
        if b.n() != arb.n() {
            return Err(Error::LengthMismatch {
                expected: arb.n(),
                actual: b.n(),
            });
        }
        out.xs.xor_assign(&b.x);
        out.ys.xor_assign(&b.y);
    }
    Ok(out)
}

/// Smallest `n` with `m / 2^(n-1) <= eps_f`.
pub fn required_n(m_bits: u64, eps_f: f64) -> Result<u32> {
    if m_bits == 0 {
        return Err(Error::invalid("message length must be at least one bit"));
    }
    if !(eps_f > 0.0 && eps_f < 1.0) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1), got {eps_f}")));
    }
    let m = m_bits as f64;
    let secure = |n: i32| m * 0.5f64.powi(n - 1) <= eps_f;
    let mut n = ((m / eps_f).log2() + 1.0).ceil() as i32;
    while !secure(n) {
        n += 1;
    }
    while n > 2 && secure(n - 1) {
        n -= 1;
    }
    Ok(n.max(2) as u32)
}

/// Total key over all `k + 1` signer links: `3n(k+1)`.
pub fn total_consumption(m_bits: u64, eps_f: f64, k: u64) -> Result<u64> {
    Ok(3 * required_n(m_bits, eps_f)? as u64 * (k + 1))
}
