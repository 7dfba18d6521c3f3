//! CKKS parameter assembly and validation.

use std::sync::Arc;

use crate::ring::modarith::next_ntt_prime;
use crate::ring::RingParams;
use crate::{Error, Result};

use super::encoding::Encoder;

/// User-facing knobs. The ring degree and modulus chain are derived: degree
/// is twice the slot count, the chain is one ~60-bit base prime plus one
/// rescaling prime per level of multiplicative depth, each chosen as the
/// smallest NTT-friendly prime above its target bit length.
#[derive(Debug, Clone, PartialEq)]
pub struct CkksParamsSpec {
    pub slot_count: usize,
    pub scale_bits: u32,
    pub max_depth: usize,
    pub security_bits: u32,
    pub error_sigma: f64,
}

impl Default for CkksParamsSpec {
    fn default() -> Self {
        Self {
            slot_count: 8192,
            scale_bits: 52,
            max_depth: 2,
            security_bits: 128,
            error_sigma: 3.19,
        }
    }
}

const BASE_PRIME_BITS: u32 = 60;

/// Fully-resolved scheme parameters shared by keys, plaintexts, and
/// ciphertexts. Cheap to clone.
#[derive(Debug, Clone)]
pub struct CkksParams {
    ring: Arc<RingParams>,
    encoder: Arc<Encoder>,
    slot_count: usize,
    scale_bits: u32,
    max_depth: usize,
    security_bits: u32,
    error_sigma: f64,
}

impl CkksParams {
    /// Resolves and validates a parameter spec.
    pub fn new(spec: &CkksParamsSpec) -> Result<Self> {
        if !spec.slot_count.is_power_of_two() || spec.slot_count < 2 {
            return Err(Error::InvalidParams(format!(
                "slot count {} is not a power of two >= 2",
                spec.slot_count
            )));
        }
        if spec.max_depth == 0 {
            return Err(Error::InvalidParams("max_depth must be >= 1".into()));
        }
        if spec.scale_bits == 0 || spec.scale_bits > 60 {
            return Err(Error::InvalidParams(format!(
                "scale_bits {} outside supported range 1..=60",
                spec.scale_bits
            )));
        }
        let n = 2 * spec.slot_count;
        let two_n = 2 * n as u64;
        let mut primes = vec![next_ntt_prime(1 << BASE_PRIME_BITS, two_n)];
        for _ in 0..spec.max_depth {
            // Rescaling primes sit just above 2^scale_bits so one rescale
            // brings the scale back to ~D; distinct by walking forward.
            let mut candidate = next_ntt_prime(1 << spec.scale_bits, two_n);
            while primes.contains(&candidate) {
                candidate = next_ntt_prime(candidate, two_n);
            }
            primes.push(candidate);
        }
        let ring = RingParams::new(n, &primes, spec.security_bits)?;
        Ok(Self::from_ring(ring, spec))
    }

    /// Assembles parameters over an explicit ring, skipping prime derivation.
    /// Used for test-scale rings; the ring still decides its own security
    /// validation path.
    pub fn with_ring(ring: Arc<RingParams>, spec: &CkksParamsSpec) -> Result<Self> {
        if ring.degree() != 2 * spec.slot_count {
            return Err(Error::InvalidParams(format!(
                "ring degree {} does not match 2 x {} slots",
                ring.degree(),
                spec.slot_count
            )));
        }
        if spec.max_depth + 1 > ring.chain_len() {
            return Err(Error::InvalidParams(format!(
                "depth {} needs {} primes but the chain has {}",
                spec.max_depth,
                spec.max_depth + 1,
                ring.chain_len()
            )));
        }
        Ok(Self::from_ring(ring, spec))
    }

    fn from_ring(ring: Arc<RingParams>, spec: &CkksParamsSpec) -> Self {
        let encoder = Arc::new(Encoder::new(ring.degree()));
        Self {
            ring,
            encoder,
            slot_count: spec.slot_count,
            scale_bits: spec.scale_bits,
            max_depth: spec.max_depth,
            security_bits: spec.security_bits,
            error_sigma: spec.error_sigma,
        }
    }

    pub fn ring(&self) -> &Arc<RingParams> {
        &self.ring
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn slot_count(&self) -> usize {
        self.slot_count
    }

    pub fn scale_bits(&self) -> u32 {
        self.scale_bits
    }

    /// The default encoding scale `D = 2^scale_bits`.
    pub fn scale(&self) -> f64 {
        (1u64 << self.scale_bits) as f64
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn security_bits(&self) -> u32 {
        self.security_bits
    }

    pub fn error_sigma(&self) -> f64 {
        self.error_sigma
    }

    /// Top level index (fresh ciphertexts start here).
    pub fn top_level(&self) -> usize {
        self.ring.chain_len() - 1
    }

    pub fn same_params(&self, other: &Self) -> bool {
        self.ring.same_ring(&other.ring)
            && self.slot_count == other.slot_count
            && self.scale_bits == other.scale_bits
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spec_resolves_to_paper_parameters() {
        let params = CkksParams::new(&CkksParamsSpec::default()).unwrap();
        assert_eq!(params.ring().degree(), 16384);
        assert_eq!(params.slot_count(), 8192);
        assert_eq!(params.scale_bits(), 52);
        assert_eq!(params.max_depth(), 2);
        assert_eq!(params.security_bits(), 128);
        let primes = params.ring().primes();
        assert_eq!(primes.len(), 3);
        assert_eq!(primes[0], 1_152_921_504_607_338_497); // 2^60 + 491521
        assert_eq!(primes[1], 4_503_599_627_763_713); // 2^52 + 393217
        assert_eq!(primes[2], 4_503_599_627_796_481); // 2^52 + 425985
        let total_bits: u32 = primes.iter().map(|q| q.ilog2() + 1).sum();
        assert!(total_bits <= 438);
    }

    #[test]
    fn oversized_chain_rejected() {
        // Eight 60-bit primes blow the 438-bit budget at N = 16384.
        let two_n = 32768u64;
        let mut primes = vec![next_ntt_prime(1 << 60, two_n)];
        for _ in 0..7 {
            primes.push(next_ntt_prime(*primes.last().unwrap(), two_n));
        }
        let err = RingParams::new(16384, &primes, 128).unwrap_err();
        assert!(matches!(err, Error::InsecureChain { total_bits: 488, .. }));
    }

    #[test]
    fn depth_must_fit_chain() {
        let ring = RingParams::new_insecure(8, &[97, 193]).unwrap();
        let spec = CkksParamsSpec {
            slot_count: 4,
            scale_bits: 6,
            max_depth: 2,
            security_bits: 0,
            error_sigma: 3.19,
        };
        assert!(CkksParams::with_ring(ring, &spec).is_err());
    }
}
