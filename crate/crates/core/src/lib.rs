//! Arbitrated one-to-many quantum digital signatures.
//!
//! Quantum key distribution is modelled as perfectly shared random key
//! strings; everything above it is implemented here: the LFSR-based Toeplitz
//! hash, the XOR key algebra, the three-stage protocol run over a
//! deterministic discrete-event simulator, Monte Carlo attack experiments,
//! and the CW-pumped entangled-source key rate model used for key budgeting.

pub mod adversary;
pub mod baselines;
pub mod bits;
pub mod error;
pub mod gf2_hash;
pub mod keymat;
pub mod netsim;
pub mod protocol;
pub mod qkd_model;
pub mod scenario;

pub use bits::BitString;
pub use error::{Error, Result};
pub use gf2_hash::{Gf2Poly, LfsrToeplitzHasher};
pub use keymat::{KeyBundle, SecurityParams, SessionKeys};
pub use protocol::{ReceiverId, SignatureBundle, VerificationOutcome};

/// Bits in a message of `bytes` bytes.
pub fn bytes_to_bits(bytes: u64) -> u64 {
    bytes * 8
}
