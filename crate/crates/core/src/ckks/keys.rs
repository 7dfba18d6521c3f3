//! RLWE key generation.

use rand::Rng;

use crate::ring::{sample_gaussian_error, sample_ternary_secret, sample_uniform, RnsPolynomial};

use super::params::CkksParams;

/// Secret decryption key: a uniform ternary ring element.
///
/// Deliberately opaque — no accessor exposes the raw residues and no byte
/// encoding exists anywhere in the workspace, so it cannot cross the wire.
pub struct SecretKey {
    pub(crate) s: RnsPolynomial,
}

impl std::fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SecretKey(..)")
    }
}

/// Public encryption key `(b, a)` with `b = -a*s + e`.
#[derive(Debug, Clone)]
pub struct PublicKey {
    pub(crate) b: RnsPolynomial,
    pub(crate) a: RnsPolynomial,
}

impl PublicKey {
    /// Key components in evaluation domain, exposed for serialization.
    pub fn components(&self) -> (&RnsPolynomial, &RnsPolynomial) {
        (&self.b, &self.a)
    }

    /// Reassembles a key from serialized components.
    pub fn from_components(b: RnsPolynomial, a: RnsPolynomial) -> Self {
        Self { b, a }
    }
}

#[derive(Debug)]
pub struct KeyPair {
    pub public: PublicKey,
    pub secret: SecretKey,
}

/// Samples an RLWE key pair: ternary secret `s`, uniform `a`, and
/// `b = -a*s + e` with fresh Gaussian noise `e`.
pub fn keygen<R: Rng + ?Sized>(params: &CkksParams, rng: &mut R) -> KeyPair {
    let ring = params.ring();
    let mut s = sample_ternary_secret(ring, rng);
    s.ntt_forward_in_place().expect("fresh sample is in coefficient domain");

    let a = sample_uniform(ring, rng);
    let mut e = sample_gaussian_error(ring, rng, params.error_sigma());
    e.ntt_forward_in_place().expect("fresh sample is in coefficient domain");

    let b = a
        .mul(&s)
        .and_then(|as_prod| e.sub(&as_prod))
        .expect("keygen operands share ring and level");

    KeyPair {
        public: PublicKey { b, a },
        secret: SecretKey { s },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ckks::params::CkksParamsSpec;
    use crate::ring::RingParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn test_params() -> CkksParams {
        use crate::ring::modarith::next_ntt_prime;
        let q0 = next_ntt_prime(1 << 45, 64);
        let q1 = next_ntt_prime(q0, 64);
        let ring = RingParams::new_insecure(32, &[q0, q1]).unwrap();
        CkksParams::with_ring(
            ring,
            &CkksParamsSpec {
                slot_count: 16,
                scale_bits: 30,
                max_depth: 1,
                security_bits: 0,
                error_sigma: 3.19,
            },
        )
        .unwrap()
    }

    #[test]
    fn deterministic_under_seed() {
        let params = test_params();
        let k1 = keygen(&params, &mut ChaCha20Rng::seed_from_u64(9));
        let k2 = keygen(&params, &mut ChaCha20Rng::seed_from_u64(9));
        assert_eq!(k1.public.a, k2.public.a);
        assert_eq!(k1.public.b, k2.public.b);
        assert_eq!(k1.secret.s, k2.secret.s);
    }

    #[test]
    fn public_key_hides_small_error() {
        // b + a*s = e must have coefficients bounded by the 6-sigma cut.
        let params = test_params();
        let kp = keygen(&params, &mut ChaCha20Rng::seed_from_u64(4));
        let e = kp
            .public
            .b
            .add(&kp.public.a.mul(&kp.secret.s).unwrap())
            .unwrap()
            .ntt_inverse()
            .unwrap();
        let bound = (6.0 * params.error_sigma()).floor() as i128;
        for c in e.centered_coeffs_i128().unwrap() {
            assert!(c.abs() <= bound, "error coefficient {c} exceeds 6 sigma");
        }
    }
}
