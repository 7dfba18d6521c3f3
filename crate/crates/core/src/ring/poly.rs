//! RNS polynomials and the ring operations on them.

use std::sync::Arc;

use super::modarith::{add_mod, inv_mod, mul_mod, sub_mod};
use super::{check_same_ring, RingParams};
use crate::{Error, Result};

/// Which basis the residue vectors are expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Plain coefficients of the polynomial.
    Coefficient,
    /// Pointwise evaluations at the 2N-th roots of unity (NTT form).
    Evaluation,
}

/// A polynomial over `Z_Q[X]/(X^N + 1)` stored as one residue vector per
/// active prime of the chain. The number of residue vectors determines the
/// level: a polynomial carrying `l + 1` residues lives at level `l`.
#[derive(Debug, Clone)]
pub struct RnsPolynomial {
    params: Arc<RingParams>,
    residues: Vec<Vec<u64>>,
    domain: Domain,
}

impl RnsPolynomial {
    /// Zero polynomial at level `level` in the given domain.
    pub fn zero(params: &Arc<RingParams>, level: usize, domain: Domain) -> Self {
        assert!(level < params.chain_len(), "level beyond modulus chain");
        let n = params.degree();
        Self {
            params: Arc::clone(params),
            residues: vec![vec![0u64; n]; level + 1],
            domain,
        }
    }

    /// Builds a top-level coefficient-domain polynomial from signed integers,
    /// reducing each coefficient modulo every chain prime.
    pub fn from_signed_coeffs(params: &Arc<RingParams>, coeffs: &[i64]) -> Self {
        let signed: Vec<i128> = coeffs.iter().map(|&c| c as i128).collect();
        Self::from_signed_coeffs_at_level(params, &signed, params.chain_len() - 1)
    }

    /// As [`from_signed_coeffs`](Self::from_signed_coeffs) but with wide
    /// coefficients and an explicit level.
    pub fn from_signed_coeffs_at_level(
        params: &Arc<RingParams>,
        coeffs: &[i128],
        level: usize,
    ) -> Self {
        assert_eq!(coeffs.len(), params.degree(), "coefficient count != degree");
        assert!(level < params.chain_len(), "level beyond modulus chain");
        let residues = params.primes()[..=level]
            .iter()
            .map(|&q| {
                coeffs
                    .iter()
                    .map(|&c| c.rem_euclid(q as i128) as u64)
                    .collect()
            })
            .collect();
        Self {
            params: Arc::clone(params),
            residues,
            domain: Domain::Coefficient,
        }
    }

    /// Wraps raw residue vectors. Each vector must be length-N with entries
    /// reduced mod the corresponding prime.
    pub fn from_residues(
        params: &Arc<RingParams>,
        residues: Vec<Vec<u64>>,
        domain: Domain,
    ) -> Result<Self> {
        if residues.is_empty() || residues.len() > params.chain_len() {
            return Err(Error::ParamsMismatch);
        }
        for (r, &q) in residues.iter().zip(params.primes()) {
            if r.len() != params.degree() {
                return Err(Error::ParamsMismatch);
            }
            if r.iter().any(|&x| x >= q) {
                return Err(Error::InvalidParams(format!(
                    "residue not reduced mod {q}"
                )));
            }
        }
        Ok(Self {
            params: Arc::clone(params),
            residues,
            domain,
        })
    }

    pub fn params(&self) -> &Arc<RingParams> {
        &self.params
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Level index: number of active primes minus one.
    pub fn level(&self) -> usize {
        self.residues.len() - 1
    }

    pub fn residues(&self) -> &[Vec<u64>] {
        &self.residues
    }

    /// Primes active at this polynomial's level.
    pub fn active_primes(&self) -> &[u64] {
        &self.params.primes()[..self.residues.len()]
    }

    fn expect_domain(&self, expected: Domain) -> Result<()> {
        if self.domain == expected {
            Ok(())
        } else {
            Err(Error::WrongDomain {
                expected,
                found: self.domain,
            })
        }
    }

    fn check_compat(&self, other: &Self) -> Result<()> {
        check_same_ring(&self.params, &other.params)?;
        if self.residues.len() != other.residues.len() {
            return Err(Error::LevelMismatch(self.level(), other.level()));
        }
        if self.domain != other.domain {
            return Err(Error::WrongDomain {
                expected: self.domain,
                found: other.domain,
            });
        }
        Ok(())
    }

    /// Forward NTT; input must be in the coefficient domain.
    pub fn ntt_forward(&self) -> Result<Self> {
        self.expect_domain(Domain::Coefficient)?;
        let mut out = self.clone();
        out.ntt_forward_in_place()?;
        Ok(out)
    }

    /// Inverse NTT; input must be in the evaluation domain.
    pub fn ntt_inverse(&self) -> Result<Self> {
        self.expect_domain(Domain::Evaluation)?;
        let mut out = self.clone();
        out.ntt_inverse_in_place()?;
        Ok(out)
    }

    pub fn ntt_forward_in_place(&mut self) -> Result<()> {
        self.expect_domain(Domain::Coefficient)?;
        for (i, r) in self.residues.iter_mut().enumerate() {
            self.params.table(i).forward(r);
        }
        self.domain = Domain::Evaluation;
        Ok(())
    }

    pub fn ntt_inverse_in_place(&mut self) -> Result<()> {
        self.expect_domain(Domain::Evaluation)?;
        for (i, r) in self.residues.iter_mut().enumerate() {
            self.params.table(i).inverse(r);
        }
        self.domain = Domain::Coefficient;
        Ok(())
    }

    /// Coefficient-wise sum mod each prime. Operands must share ring, level,
    /// and domain.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compat(other)?;
        let mut out = self.clone();
        for (i, (r, o)) in out
            .residues
            .iter_mut()
            .zip(other.residues.iter())
            .enumerate()
        {
            let q = self.params.primes()[i];
            for (x, &y) in r.iter_mut().zip(o) {
                *x = add_mod(*x, y, q);
            }
        }
        Ok(out)
    }

    /// Coefficient-wise difference mod each prime.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compat(other)?;
        let mut out = self.clone();
        for (i, (r, o)) in out
            .residues
            .iter_mut()
            .zip(other.residues.iter())
            .enumerate()
        {
            let q = self.params.primes()[i];
            for (x, &y) in r.iter_mut().zip(o) {
                *x = sub_mod(*x, y, q);
            }
        }
        Ok(out)
    }

    /// Additive inverse.
    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for (i, r) in out.residues.iter_mut().enumerate() {
            let q = self.params.primes()[i];
            for x in r.iter_mut() {
                *x = sub_mod(0, *x, q);
            }
        }
        out
    }

    /// Negacyclic product. Operands must be in the evaluation domain, where
    /// the product is a pointwise multiply per residue; callers holding
    /// coefficient-domain polynomials convert explicitly first.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compat(other)?;
        self.expect_domain(Domain::Evaluation)?;
        let mut out = self.clone();
        for (i, (r, o)) in out
            .residues
            .iter_mut()
            .zip(other.residues.iter())
            .enumerate()
        {
            let q = self.params.primes()[i];
            for (x, &y) in r.iter_mut().zip(o) {
                *x = mul_mod(*x, y, q);
            }
        }
        Ok(out)
    }

    /// Drops the last active prime, replacing the value `x` by
    /// `round(x / q_last)` in every remaining residue (RNS basis drop with
    /// rounding correction). Requires the coefficient domain and at least two
    /// active primes.
    pub fn drop_last_modulus(&self) -> Result<Self> {
        self.expect_domain(Domain::Coefficient)?;
        let keep = self.residues.len() - 1;
        if keep == 0 {
            return Err(Error::LevelExhausted);
        }
        let q_last = self.active_primes()[keep];
        let half = q_last / 2; // q_last odd: centered remainder is unambiguous
        let last = &self.residues[keep];

        let mut residues = Vec::with_capacity(keep);
        for i in 0..keep {
            let q = self.params.primes()[i];
            let q_last_inv = inv_mod(q_last % q, q);
            let out = self.residues[i]
                .iter()
                .zip(last.iter())
                .map(|(&x, &x_last)| {
                    // Centered remainder of x mod q_last, reduced into Z_q.
                    let c = if x_last > half {
                        sub_mod(x_last % q, q_last % q, q)
                    } else {
                        x_last % q
                    };
                    mul_mod(sub_mod(x, c, q), q_last_inv, q)
                })
                .collect();
            residues.push(out);
        }
        Ok(Self {
            params: Arc::clone(&self.params),
            residues,
            domain: Domain::Coefficient,
        })
    }

    /// Garner mixed-radix digits of the value with residues `get(j) mod q_j`,
    /// so `x = d_0 + q_0*(d_1 + q_1*(d_2 + ..))` with `d_j < q_j`.
    fn garner_digits_from(
        primes: &[u64],
        inv_prod: &[u64],
        get: impl Fn(usize) -> u64,
        digits: &mut [u64],
    ) {
        for j in 0..primes.len() {
            let qj = primes[j];
            let xj = get(j);
            let mut v = 0u64;
            let mut p = 1u64;
            for i in 0..j {
                v = add_mod(v, mul_mod(digits[i] % qj, p, qj), qj);
                p = mul_mod(p, primes[i] % qj, qj);
            }
            digits[j] = mul_mod(sub_mod(xj, v, qj), inv_prod[j], qj);
        }
    }

    fn garner_digits(&self, idx: usize, negate: bool, inv_prod: &[u64], digits: &mut [u64]) {
        let primes = self.active_primes();
        Self::garner_digits_from(
            primes,
            inv_prod,
            |j| {
                let xj = self.residues[j][idx];
                if negate {
                    sub_mod(0, xj, primes[j])
                } else {
                    xj
                }
            },
            digits,
        );
    }

    /// inv_prod[j] = (q_0 * .. * q_{j-1})^-1 mod q_j, with inv_prod[0] = 1.
    fn garner_inverses(&self) -> Vec<u64> {
        let primes = self.active_primes();
        let mut inv_prod = vec![1u64; primes.len()];
        for j in 1..primes.len() {
            let qj = primes[j];
            let mut p = 1u64;
            for &qi in &primes[..j] {
                p = mul_mod(p, qi % qj, qj);
            }
            inv_prod[j] = inv_mod(p, qj);
        }
        inv_prod
    }

    /// Reconstructs each coefficient as a centered integer and converts to
    /// `f64`. Works at any level via Garner's mixed-radix recomposition, so
    /// no big-integer arithmetic is needed; coefficients with magnitude close
    /// to Q/2 lose the usual `f64` precision but nothing more.
    pub fn centered_coeffs_f64(&self) -> Result<Vec<f64>> {
        self.expect_domain(Domain::Coefficient)?;
        let primes = self.active_primes();
        let l = primes.len();
        let inv_prod = self.garner_inverses();

        // Mixed-radix digits of (Q-1)/2, whose residue mod q_j is (q_j-1)/2.
        let mut half_digits = vec![0u64; l];
        Self::garner_digits_from(primes, &inv_prod, |j| (primes[j] - 1) / 2, &mut half_digits);

        let compose = |digits: &[u64]| -> f64 {
            let mut acc = 0.0f64;
            for j in (0..l).rev() {
                acc = acc * primes[j] as f64 + digits[j] as f64;
            }
            acc
        };
        // x > (Q-1)/2, compared most-significant digit first.
        let above_half = |digits: &[u64]| -> bool {
            for j in (0..l).rev() {
                if digits[j] != half_digits[j] {
                    return digits[j] > half_digits[j];
                }
            }
            false
        };

        let mut digits = vec![0u64; l];
        let mut out = Vec::with_capacity(self.params.degree());
        for idx in 0..self.params.degree() {
            self.garner_digits(idx, false, &inv_prod, &mut digits);
            // Values above Q/2 represent negatives; recompose the negation to
            // keep the small magnitude exact instead of subtracting ~Q in f64.
            if above_half(&digits) {
                self.garner_digits(idx, true, &inv_prod, &mut digits);
                out.push(-compose(&digits));
            } else {
                out.push(compose(&digits));
            }
        }
        Ok(out)
    }

    /// Exact centered reconstruction for chains whose product fits `i128`
    /// (total below 126 bits). Intended for tests and small parameter sets.
    pub fn centered_coeffs_i128(&self) -> Result<Vec<i128>> {
        self.expect_domain(Domain::Coefficient)?;
        let primes = self.active_primes();
        let total_bits: u32 = primes.iter().map(|q| q.ilog2() + 1).sum();
        assert!(
            total_bits <= 126,
            "chain too wide for exact i128 reconstruction"
        );
        let l = primes.len();
        let q_full: i128 = primes.iter().map(|&q| q as i128).product();
        let inv_prod = self.garner_inverses();

        let mut digits = vec![0u64; l];
        let mut out = Vec::with_capacity(self.params.degree());
        for idx in 0..self.params.degree() {
            self.garner_digits(idx, false, &inv_prod, &mut digits);
            let mut acc = 0i128;
            for j in (0..l).rev() {
                acc = acc * primes[j] as i128 + digits[j] as i128;
            }
            if acc > q_full / 2 {
                acc -= q_full;
            }
            out.push(acc);
        }
        Ok(out)
    }
}

impl PartialEq for RnsPolynomial {
    fn eq(&self, other: &Self) -> bool {
        self.params.same_ring(&other.params)
            && self.domain == other.domain
            && self.residues == other.residues
    }
}
