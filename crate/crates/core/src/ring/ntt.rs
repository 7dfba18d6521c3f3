//! Negacyclic number-theoretic transform.
//!
//! For the ring `Z_q[X]/(X^N + 1)` with `q ≡ 1 (mod 2N)`, the transform
//! evaluates a polynomial at the primitive 2N-th roots of unity `ψ^(2i+1)`,
//! so that multiplication becomes a pointwise product (negative wrapped
//! convolution). Forward is Cooley-Tukey with the ψ-powers folded into the
//! twiddles; inverse mirrors the butterflies stage by stage, so the pair is
//! an exact integer bijection. Twiddles carry Shoup companions for fast
//! modular products.

use super::modarith::{
    add_mod, bit_reverse, inv_mod, mul_mod_shoup, pow_mod, shoup_precompute, sub_mod,
};
use crate::{Error, Result};

/// Precomputed twiddle tables for one prime of the chain.
#[derive(Debug, Clone)]
pub struct NttTable {
    q: u64,
    n: usize,
    log_n: u32,
    // zetas[k] = ψ^bitrev(k); index 0 unused.
    zetas: Vec<u64>,
    zetas_shoup: Vec<u64>,
    inv_zetas: Vec<u64>,
    inv_zetas_shoup: Vec<u64>,
    n_inv: u64,
    n_inv_shoup: u64,
}

impl NttTable {
    /// Builds tables for ring degree `n` (a power of two) and prime `q ≡ 1 (mod 2n)`.
    pub fn new(n: usize, q: u64) -> Result<Self> {
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::InvalidParams(format!(
                "ring degree {n} is not a power of two >= 2"
            )));
        }
        if q >= 1 << 62 {
            return Err(Error::InvalidParams(format!("prime {q} exceeds 2^62")));
        }
        if (q - 1) % (2 * n as u64) != 0 {
            return Err(Error::InvalidParams(format!(
                "prime {q} is not congruent to 1 mod {}",
                2 * n
            )));
        }
        let psi = find_primitive_2n_root(n, q)?;
        let psi_inv = inv_mod(psi, q);
        let log_n = n.trailing_zeros();

        let mut zetas = vec![1u64; n];
        let mut inv_zetas = vec![1u64; n];
        for (k, (z, iz)) in zetas.iter_mut().zip(inv_zetas.iter_mut()).enumerate() {
            let e = bit_reverse(k, log_n) as u64;
            *z = pow_mod(psi, e, q);
            *iz = pow_mod(psi_inv, e, q);
        }
        let zetas_shoup = zetas.iter().map(|&w| shoup_precompute(w, q)).collect();
        let inv_zetas_shoup = inv_zetas.iter().map(|&w| shoup_precompute(w, q)).collect();
        let n_inv = inv_mod(n as u64, q);

        Ok(Self {
            q,
            n,
            log_n,
            zetas,
            zetas_shoup,
            inv_zetas,
            inv_zetas_shoup,
            n_inv,
            n_inv_shoup: shoup_precompute(n_inv, q),
        })
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    /// In-place forward transform: coefficients -> evaluations.
    pub fn forward(&self, a: &mut [u64]) {
        debug_assert_eq!(a.len(), self.n);
        let q = self.q;
        let mut t = self.n;
        let mut m = 1;
        while m < self.n {
            t >>= 1;
            for i in 0..m {
                let j1 = 2 * i * t;
                let z = self.zetas[m + i];
                let zs = self.zetas_shoup[m + i];
                for j in j1..j1 + t {
                    let u = a[j];
                    let v = mul_mod_shoup(a[j + t], z, zs, q);
                    a[j] = add_mod(u, v, q);
                    a[j + t] = sub_mod(u, v, q);
                }
            }
            m <<= 1;
        }
    }

    /// In-place inverse transform: evaluations -> coefficients.
    pub fn inverse(&self, a: &mut [u64]) {
        debug_assert_eq!(a.len(), self.n);
        let q = self.q;
        let mut t = 1;
        let mut m = self.n >> 1;
        while m >= 1 {
            for i in 0..m {
                let j1 = 2 * i * t;
                let z = self.inv_zetas[m + i];
                let zs = self.inv_zetas_shoup[m + i];
                for j in j1..j1 + t {
                    let x = a[j];
                    let y = a[j + t];
                    a[j] = add_mod(x, y, q);
                    a[j + t] = mul_mod_shoup(sub_mod(x, y, q), z, zs, q);
                }
            }
            t <<= 1;
            m >>= 1;
        }
        for x in a.iter_mut() {
            *x = mul_mod_shoup(*x, self.n_inv, self.n_inv_shoup, q);
        }
    }

    #[allow(dead_code)]
    pub(crate) fn log_degree(&self) -> u32 {
        self.log_n
    }
}

/// Finds ψ with ψ^n = -1 mod q, i.e. a primitive 2n-th root of unity.
fn find_primitive_2n_root(n: usize, q: u64) -> Result<u64> {
    let exponent = (q - 1) / (2 * n as u64);
    for g in 2..u64::MAX {
        let candidate = pow_mod(g, exponent, q);
        if pow_mod(candidate, n as u64, q) == q - 1 {
            return Ok(candidate);
        }
        if g > 1000 {
            break;
        }
    }
    Err(Error::InvalidParams(format!(
        "no primitive {}th root of unity found mod {q}",
        2 * n
    )))
}
