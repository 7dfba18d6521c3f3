//! Exact arithmetic over the negacyclic ring `Z_Q[X]/(X^N + 1)` with the
//! coefficient modulus split into a chain of NTT-friendly primes (RNS form).

pub mod modarith;
pub mod ntt;
pub mod poly;
pub mod sample;
pub mod security;

pub use poly::{Domain, RnsPolynomial};
pub use sample::{sample_gaussian_error, sample_ternary_secret, sample_uniform};

use std::sync::Arc;

use crate::{Error, Result};
use ntt::NttTable;

/// Parameters of the polynomial ring: degree, prime chain, and NTT tables.
#[derive(Debug)]
pub struct RingParams {
    n: usize,
    primes: Vec<u64>,
    tables: Vec<NttTable>,
    security_bits: u32,
}

impl RingParams {
    /// Validating constructor. Checks degree, NTT-friendliness and
    /// distinctness of every prime, and the security bound on the total
    /// modulus size for the claimed security level.
    pub fn new(n: usize, primes: &[u64], security_bits: u32) -> Result<Arc<Self>> {
        let max_bits = security::max_modulus_bits(n, security_bits).ok_or_else(|| {
            Error::InvalidParams(format!(
                "no security bound known for ring degree {n} at {security_bits}-bit security"
            ))
        })?;
        let total_bits: u32 = primes.iter().map(|q| q.ilog2() + 1).sum();
        if total_bits > max_bits {
            return Err(Error::InsecureChain {
                ring_degree: n,
                total_bits,
                max_bits,
                security_bits,
            });
        }
        Self::build(n, primes, security_bits)
    }

    /// Constructor for test-scale rings whose degree has no entry in the
    /// security table. Never use for real keys.
    pub fn new_insecure(n: usize, primes: &[u64]) -> Result<Arc<Self>> {
        Self::build(n, primes, 0)
    }

    fn build(n: usize, primes: &[u64], security_bits: u32) -> Result<Arc<Self>> {
        if primes.is_empty() {
            return Err(Error::InvalidParams("empty modulus chain".into()));
        }
        for (i, q) in primes.iter().enumerate() {
            if primes[..i].contains(q) {
                return Err(Error::InvalidParams(format!("duplicate prime {q} in chain")));
            }
            if !modarith::is_prime(*q) {
                return Err(Error::InvalidParams(format!("{q} is not prime")));
            }
        }
        let tables = primes
            .iter()
            .map(|&q| NttTable::new(n, q))
            .collect::<Result<Vec<_>>>()?;
        Ok(Arc::new(Self {
            n,
            primes: primes.to_vec(),
            tables,
            security_bits,
        }))
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    /// Full modulus chain `q_0..q_L`.
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn chain_len(&self) -> usize {
        self.primes.len()
    }

    pub fn security_bits(&self) -> u32 {
        self.security_bits
    }

    pub(crate) fn table(&self, i: usize) -> &NttTable {
        &self.tables[i]
    }

    /// Structural compatibility: same degree and same prime chain.
    pub fn same_ring(&self, other: &Self) -> bool {
        self.n == other.n && self.primes == other.primes
    }
}

pub(crate) fn check_same_ring(a: &RingParams, b: &RingParams) -> Result<()> {
    if a.same_ring(b) {
        Ok(())
    } else {
        Err(Error::ParamsMismatch)
    }
}
