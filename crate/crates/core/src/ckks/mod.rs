//! The CKKS approximate homomorphic scheme: key generation, encryption and
//! decryption, the canonical-embedding encoder, and the evaluation subset
//! needed for encrypted weighted aggregation (ciphertext addition,
//! ciphertext-plaintext multiplication, rescaling).
//!
//! Values live in SIMD slots: one ciphertext packs `N/2` reals, and every
//! operation acts slotwise. Precision is approximate by design — encryption
//! noise and rescale rounding show up as tiny per-slot errors, bounded by the
//! precision tests rather than tracked per ciphertext.

mod cipher;
mod encoding;
mod keys;
mod params;

pub use cipher::{add_ct, decrypt, encrypt, mul_plain, rescale, Ciphertext, Plaintext};
pub use encoding::Encoder;
pub use keys::{keygen, KeyPair, PublicKey, SecretKey};
pub use params::{CkksParams, CkksParamsSpec};
