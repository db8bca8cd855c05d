//! GF(2) polynomial arithmetic, LFSR keystreams and the LFSR-based Toeplitz
//! universal hash.

mod lfsr;
mod oracle;
mod poly;
mod toeplitz;

pub use lfsr::lfsr_stream;
pub use oracle::{toeplitz_matrix, toeplitz_oracle};
pub use poly::{decode_poly, encode_poly, poly_is_irreducible, sample_irreducible, Gf2Poly};
pub use toeplitz::{hash, LfsrToeplitzHasher};

/// Collision bound of the LFSR-Toeplitz family for `m`-bit messages and
/// `n`-bit tags: `m / 2^(n-1)`.
pub fn collision_bound(m_bits: u64, n: u32) -> f64 {
    m_bits as f64 * 0.5f64.powi(n as i32 - 1)
}
