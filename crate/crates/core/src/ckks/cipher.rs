//! Plaintexts, ciphertexts, and the homomorphic evaluation subset.

use rand::Rng;

use crate::ring::{sample_gaussian_error, sample_ternary_secret, RnsPolynomial};
use crate::{Error, Result};

use super::encoding::{decode_from_eval, encode_to_eval};
use super::keys::{PublicKey, SecretKey};
use super::params::CkksParams;

/// Relative scale difference below which two ciphertext scales are treated
/// as equal when adding.
pub const SCALE_MATCH_TOLERANCE: f64 = 1.0 / (1u64 << 40) as f64;

/// An encoded (not encrypted) slot vector: ring element plus scale metadata.
#[derive(Debug, Clone)]
pub struct Plaintext {
    pub(crate) poly: RnsPolynomial,
    scale: f64,
}

impl Plaintext {
    /// Encodes `values` at `scale` into the top level.
    pub fn encode(params: &CkksParams, values: &[f64], scale: f64) -> Result<Self> {
        Self::encode_at_level(params, values, scale, params.top_level())
    }

    /// Encodes `values` at `scale` into an explicit level, for operands that
    /// must line up with partially rescaled ciphertexts.
    pub fn encode_at_level(
        params: &CkksParams,
        values: &[f64],
        scale: f64,
        level: usize,
    ) -> Result<Self> {
        let poly = encode_to_eval(params.encoder(), values, scale, level, params.ring())?;
        Ok(Self { poly, scale })
    }

    /// Decodes back to `slot_count` reals.
    pub fn decode(&self, params: &CkksParams) -> Result<Vec<f64>> {
        decode_from_eval(params.encoder(), &self.poly, self.scale)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn level(&self) -> usize {
        self.poly.level()
    }
}

/// An RLWE ciphertext `(c0, c1)` with tracked scale and slot count. The
/// level is implied by the residue count of the components; scale metadata
/// follows the operation algebra exactly even though slot values are
/// approximate.
#[derive(Debug, Clone)]
pub struct Ciphertext {
    pub(crate) c0: RnsPolynomial,
    pub(crate) c1: RnsPolynomial,
    scale: f64,
    slot_count: usize,
}

impl Ciphertext {
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn level(&self) -> usize {
        self.c0.level()
    }

    pub fn slot_count(&self) -> usize {
        self.slot_count
    }

    /// Component access for serialization.
    pub fn components(&self) -> (&RnsPolynomial, &RnsPolynomial) {
        (&self.c0, &self.c1)
    }

    /// Reassembles a ciphertext from serialized parts.
    pub fn from_parts(
        c0: RnsPolynomial,
        c1: RnsPolynomial,
        scale: f64,
        slot_count: usize,
    ) -> Result<Self> {
        if c0.level() != c1.level() {
            return Err(Error::LevelMismatch(c0.level(), c1.level()));
        }
        if !c0.params().same_ring(c1.params()) {
            return Err(Error::ParamsMismatch);
        }
        Ok(Self {
            c0,
            c1,
            scale,
            slot_count,
        })
    }
}

/// Encrypts a top-level plaintext under the public key:
/// `(c0, c1) = (v*b + e0 + m, v*a + e1)` with fresh ternary `v` and
/// Gaussian `e0`, `e1`.
pub fn encrypt<R: Rng + ?Sized>(
    params: &CkksParams,
    pk: &PublicKey,
    pt: &Plaintext,
    rng: &mut R,
) -> Ciphertext {
    assert_eq!(
        pt.level(),
        params.top_level(),
        "fresh encryption expects a top-level plaintext"
    );
    let ring = params.ring();
    let mut v = sample_ternary_secret(ring, rng);
    v.ntt_forward_in_place().expect("fresh sample");
    let mut e0 = sample_gaussian_error(ring, rng, params.error_sigma());
    e0.ntt_forward_in_place().expect("fresh sample");
    let mut e1 = sample_gaussian_error(ring, rng, params.error_sigma());
    e1.ntt_forward_in_place().expect("fresh sample");

    let c0 = pk
        .b
        .mul(&v)
        .and_then(|vb| vb.add(&e0))
        .and_then(|x| x.add(&pt.poly))
        .expect("encrypt operands share ring and level");
    let c1 = pk
        .a
        .mul(&v)
        .and_then(|va| va.add(&e1))
        .expect("encrypt operands share ring and level");

    Ciphertext {
        c0,
        c1,
        scale: pt.scale,
        slot_count: params.slot_count(),
    }
}

/// Decrypts `m ~= c0 + c1*s`. Approximate by construction: noise shows up
/// as small slot error, never as a failure.
pub fn decrypt(sk: &SecretKey, ct: &Ciphertext) -> Plaintext {
    let s = at_level(&sk.s, ct.level());
    let m = ct
        .c1
        .mul(&s)
        .and_then(|c1s| ct.c0.add(&c1s))
        .expect("decrypt operands share ring and level");
    Plaintext {
        poly: m,
        scale: ct.scale,
    }
}

/// Restricts an evaluation-domain polynomial to the first `level + 1`
/// residues. NTT residues per prime are independent, so truncation is the
/// exact modulus-chain restriction.
fn at_level(poly: &RnsPolynomial, level: usize) -> RnsPolynomial {
    debug_assert!(level <= poly.level());
    if level == poly.level() {
        return poly.clone();
    }
    let residues: Vec<Vec<u64>> = poly.residues()[..=level].to_vec();
    RnsPolynomial::from_residues(poly.params(), residues, poly.domain())
        .expect("truncated residues stay valid")
}

/// Slotwise sum. Operands must agree on level and (within
/// [`SCALE_MATCH_TOLERANCE`]) on scale.
pub fn add_ct(a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
    if a.level() != b.level() {
        return Err(Error::LevelMismatch(a.level(), b.level()));
    }
    let rel = (a.scale - b.scale).abs() / a.scale.max(b.scale);
    if rel > SCALE_MATCH_TOLERANCE {
        return Err(Error::ScaleMismatch(a.scale, b.scale));
    }
    Ok(Ciphertext {
        c0: a.c0.add(&b.c0)?,
        c1: a.c1.add(&b.c1)?,
        scale: a.scale,
        slot_count: a.slot_count,
    })
}

/// Slotwise product with an encoded plaintext. The result scale is the
/// product of the operand scales; callers normally rescale next.
pub fn mul_plain(ct: &Ciphertext, pt: &Plaintext) -> Result<Ciphertext> {
    if ct.level() != pt.level() {
        return Err(Error::LevelMismatch(ct.level(), pt.level()));
    }
    Ok(Ciphertext {
        c0: ct.c0.mul(&pt.poly)?,
        c1: ct.c1.mul(&pt.poly)?,
        scale: ct.scale * pt.scale,
        slot_count: ct.slot_count,
    })
}

/// Drops the last modulus of both components, dividing the scale by the
/// dropped prime and consuming one level.
pub fn rescale(ct: &Ciphertext) -> Result<Ciphertext> {
    if ct.level() == 0 {
        return Err(Error::LevelExhausted);
    }
    let dropped = ct.c0.active_primes()[ct.level()];
    let reduce = |c: &RnsPolynomial| -> Result<RnsPolynomial> {
        let mut coeff = c.ntt_inverse()?;
        coeff = coeff.drop_last_modulus()?;
        coeff.ntt_forward_in_place()?;
        Ok(coeff)
    };
    Ok(Ciphertext {
        c0: reduce(&ct.c0)?,
        c1: reduce(&ct.c1)?,
        scale: ct.scale / dropped as f64,
        slot_count: ct.slot_count,
    })
}
