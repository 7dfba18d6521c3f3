//! Modulus bounds from the Homomorphic Encryption Standard.
//!
//! Maximum total `log2(Q)` for an RLWE instance with ternary secret and the
//! standard error distribution to reach the target classical security level.

/// (ring degree, max total modulus bits) at 128-bit classical security.
const MAX_MODULUS_BITS_128: &[(usize, u32)] = &[
    (1024, 27),
    (2048, 54),
    (4096, 109),
    (8192, 218),
    (16384, 438),
    (32768, 881),
];

/// Returns the modulus-bit budget for `ring_degree` at `security_bits`, or
/// `None` when the combination is not in the standard table.
pub fn max_modulus_bits(ring_degree: usize, security_bits: u32) -> Option<u32> {
    if security_bits != 128 {
        return None;
    }
    MAX_MODULUS_BITS_128
        .iter()
        .find(|(n, _)| *n == ring_degree)
        .map(|(_, bits)| *bits)
}
