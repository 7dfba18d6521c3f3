//! Homomorphic-encryption core for encrypted federated averaging.
//!
//! Three layers, bottom up:
//!
//! - [`ring`]: exact integer arithmetic over the negacyclic ring
//!   `Z_q[X]/(X^N + 1)` in a residue number system, with NTT-based
//!   multiplication and the samplers used for key and noise generation.
//! - [`ckks`]: the CKKS approximate scheme built on top of it — key
//!   generation, the canonical-embedding encoder, encryption, and the
//!   evaluation subset needed for encrypted weighted aggregation
//!   (ciphertext addition, ciphertext-plaintext multiplication, rescaling).
//! - [`pack`]: mapping between a model's named parameter arrays and a
//!   vector of ciphertexts packing those parameters into SIMD slots.

pub mod ckks;
pub mod error;
pub mod pack;
pub mod ring;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
